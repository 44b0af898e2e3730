#pragma once

#include <cstdint>

namespace pinr {

/// splitmix64 finalizer; used to derive independent RNG streams from one seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of stream `stream` under `seed`. Head n of a partitioned fit uses
/// stream n, and the unpartitioned model is head 0.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix_seed(seed ^ mix_seed(stream + 0x51ED2701ULL));
}

}  // namespace pinr
