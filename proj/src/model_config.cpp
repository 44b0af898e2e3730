#include "pinr/model_config.hpp"

#include "pinr/error.hpp"

namespace pinr {

std::string_view to_string(Arch arch) {
    switch (arch) {
        case Arch::Sine: return "sine";
        case Arch::ReluPe: return "relu_pe";
    }
    return "?";
}

Arch arch_from_string(std::string_view name) {
    if (name == "sine" || name == "siren") return Arch::Sine;
    if (name == "relu_pe" || name == "relu") return Arch::ReluPe;
    throw ConfigError("unknown architecture '" + std::string(name) + "' (expected sine or relu_pe)");
}

std::string_view to_string(HarmonicSchedule schedule) {
    return schedule == HarmonicSchedule::Linear ? "linear" : "geometric";
}

HarmonicSchedule schedule_from_string(std::string_view name) {
    if (name == "linear") return HarmonicSchedule::Linear;
    if (name == "geometric") return HarmonicSchedule::Geometric;
    throw ConfigError("unknown harmonic schedule '" + std::string(name) + "'");
}

int ModelConfig::embedded_dim() const {
    return arch == Arch::ReluPe ? input_dim * 2 * n_harmonics : input_dim;
}

void ModelConfig::validate() const {
    if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
    if (output_dim < 1) throw ConfigError("output_dim must be >= 1");
    if (hidden_features < 1) throw ConfigError("hidden_features must be >= 1");
    if (hidden_layers < 1) throw ConfigError("hidden_layers must be >= 1");
    if (arch == Arch::Sine && !(omega_first > 0.0 && omega_hidden > 0.0))
        throw ConfigError("omega values must be positive");
    if (arch == Arch::ReluPe && n_harmonics < 1) throw ConfigError("n_harmonics must be >= 1");
    // 2^(n-1) * pi stops being representable long before n = 1024.
    if (arch == Arch::ReluPe && schedule == HarmonicSchedule::Geometric && n_harmonics > 52)
        throw ConfigError("geometric harmonic schedule supports at most 52 harmonics");
}

}  // namespace pinr
