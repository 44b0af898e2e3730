#pragma once

#include <cstdint>

#include "pinr/autodiff.hpp"
#include "pinr/model_config.hpp"

namespace pinr {

/// Randomly initialized network for `config`, deterministic in `seed`.
///
/// Sine: first layer U(-1/fan_in, 1/fan_in), later layers
/// U(-sqrt(6/fan_in)/omega_hidden, +sqrt(6/fan_in)/omega_hidden).
/// ReLU-PE: U(-sqrt(6/fan_in), +sqrt(6/fan_in)) on every layer.
/// Biases are U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
ParamSet build(const ModelConfig& config, std::uint64_t seed);

/// Harmonic embedding of B x d coordinates into B x (2 * d * n_harmonics):
/// for each component x and i = 1..n: sin(f_i * pi * x), cos(f_i * pi * x),
/// component-major, frequency-minor, sine before cosine. f_i = i for the
/// linear schedule and 2^(i-1) for the geometric one.
Matrix embed_harmonic(const Matrix& coords, int n_harmonics,
                      HarmonicSchedule schedule = HarmonicSchedule::Linear);

/// Closed-form parameter count of one head.
std::int64_t parameter_count(const ModelConfig& config);

/// Hidden width tabulated for `head_count` heads (1..12) at matched total
/// capacity. Throws ConfigError outside the table.
int capacity_for(Arch arch, int head_count);

/// Total parameters tabulated next to each hidden width (same table).
std::int64_t tabulated_parameters(Arch arch, int head_count);

inline constexpr int kCapacityTableRows = 12;

/// Per-head config for a partitioned model: `base` with the hidden width taken
/// from the capacity table, optionally scaled by `width_scale` (desk-scale runs).
ModelConfig config_for_heads(const ModelConfig& base, int head_count, double width_scale = 1.0);

}  // namespace pinr
