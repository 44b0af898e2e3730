#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pinr {

enum class Arch : std::uint8_t { Sine = 0, ReluPe = 1 };

/// Frequency schedule of the harmonic embedding: i*pi (linear) or 2^(i-1)*pi (geometric).
enum class HarmonicSchedule : std::uint8_t { Linear = 0, Geometric = 1 };

std::string_view to_string(Arch arch);
Arch arch_from_string(std::string_view name);
std::string_view to_string(HarmonicSchedule schedule);
HarmonicSchedule schedule_from_string(std::string_view name);

/// Architecture of one coordinate MLP (one head).
///
/// `hidden_layers` counts hidden-to-hidden layers, so the network has
/// hidden_layers + 2 affine layers: input->hidden, hidden_layers x hidden->hidden,
/// hidden->output. With hidden_layers = 3 this reproduces the tabulated
/// parameter counts (e.g. 2->512, 3 hidden, 1 output = 790017).
struct ModelConfig {
    Arch arch = Arch::Sine;
    int input_dim = 2;
    int output_dim = 1;
    int hidden_features = 256;
    int hidden_layers = 3;
    double omega_first = 30.0;
    double omega_hidden = 30.0;
    int n_harmonics = 60;
    HarmonicSchedule schedule = HarmonicSchedule::Linear;

    /// Width of the first affine layer's input (after the harmonic embedding for relu_pe).
    int embedded_dim() const;
    int layer_count() const { return hidden_layers + 2; }

    /// Throws ConfigError on an invalid combination.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

}  // namespace pinr
