#include "pinr/models.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "pinr/error.hpp"

namespace pinr {

namespace {

struct CapacityRow {
    int sine_hidden;
    std::int64_t sine_params;
    int relu_hidden;
    std::int64_t relu_params;
};

// Matched-capacity widths for 1..12 heads (3 hidden layers, 1 output channel;
// ReLU rows include the 60-harmonic embedding).
constexpr std::array<CapacityRow, kCapacityTableRows> kCapacity{{
    {512, 790017, 512, 911873},
    {360, 782642, 352, 915906},
    {296, 794763, 282, 922989},
    {256, 793604, 240, 926404},
    {228, 787745, 210, 918755},
    {208, 787494, 188, 912558},
    {192, 783559, 172, 916251},
    {180, 787688, 158, 908824},
    {170, 791019, 148, 917757},
    {162, 798670, 140, 931010},
    {154, 794497, 130, 908061},
    {146, 779652, 124, 918108},
}};

const CapacityRow& row_for(int head_count) {
    if (head_count < 1 || head_count > kCapacityTableRows)
        throw ConfigError("head count " + std::to_string(head_count) +
                          " is outside the capacity table (1..12); set hidden_features explicitly");
    return kCapacity[static_cast<std::size_t>(head_count - 1)];
}

}  // namespace

ParamSet build(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    ParamSet net;
    const int n_layers = config.layer_count();
    int fan_in = config.embedded_dim();
    for (int i = 0; i < n_layers; ++i) {
        const int fan_out = i + 1 == n_layers ? config.output_dim : config.hidden_features;
        const double fi = static_cast<double>(fan_in);
        double w_bound = 0.0;
        if (config.arch == Arch::Sine)
            w_bound = i == 0 ? 1.0 / fi : std::sqrt(6.0 / fi) / config.omega_hidden;
        else
            w_bound = std::sqrt(6.0 / fi);
        const double b_bound = 1.0 / std::sqrt(fi);

        Layer layer{Matrix(fan_out, fan_in), Vector(fan_out)};
        std::uniform_real_distribution<double> w_dist(-w_bound, w_bound);
        std::uniform_real_distribution<double> b_dist(-b_bound, b_bound);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) layer.weight(r, c) = w_dist(rng);
        for (int r = 0; r < fan_out; ++r) layer.bias(r) = b_dist(rng);
        net.layers.push_back(std::move(layer));
        fan_in = fan_out;
    }
    return net;
}

Matrix embed_harmonic(const Matrix& coords, int n_harmonics, HarmonicSchedule schedule) {
    if (n_harmonics < 1) throw ConfigError("n_harmonics must be >= 1");
    const Eigen::Index d = coords.cols();
    Matrix out(coords.rows(), 2 * d * n_harmonics);
    for (Eigen::Index j = 0; j < d; ++j) {
        for (int i = 1; i <= n_harmonics; ++i) {
            const double f = schedule == HarmonicSchedule::Linear ? static_cast<double>(i) : std::ldexp(1.0, i - 1);
            const Eigen::Index col = 2 * (j * n_harmonics + (i - 1));
            for (Eigen::Index b = 0; b < coords.rows(); ++b) {
                const double arg = f * std::numbers::pi * coords(b, j);
                out(b, col) = std::sin(arg);
                out(b, col + 1) = std::cos(arg);
            }
        }
    }
    return out;
}

std::int64_t parameter_count(const ModelConfig& config) {
    const std::int64_t h = config.hidden_features;
    const std::int64_t in = config.embedded_dim();
    return (in + 1) * h + static_cast<std::int64_t>(config.hidden_layers) * (h + 1) * h +
           (h + 1) * config.output_dim;
}

int capacity_for(Arch arch, int head_count) {
    const auto& row = row_for(head_count);
    return arch == Arch::Sine ? row.sine_hidden : row.relu_hidden;
}

std::int64_t tabulated_parameters(Arch arch, int head_count) {
    const auto& row = row_for(head_count);
    return arch == Arch::Sine ? row.sine_params : row.relu_params;
}

ModelConfig config_for_heads(const ModelConfig& base, int head_count, double width_scale) {
    if (!(width_scale > 0.0)) throw ConfigError("width_scale must be positive");
    ModelConfig c = base;
    c.hidden_features = std::max(1, static_cast<int>(std::lround(capacity_for(base.arch, head_count) * width_scale)));
    return c;
}

}  // namespace pinr
