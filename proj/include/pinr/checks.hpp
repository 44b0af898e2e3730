#pragma once

// Self-check suites shared by the `check` subcommand and the acceptance run.

#include <cstdint>
#include <string>
#include <vector>

#include "pinr/image.hpp"

namespace pinr {

struct GradSuite {
    int nets_per_arch = 0;
    double sine_max_rel = 0.0;       // omega = 1 sine nets
    double relu_max_rel = 0.0;       // ReLU + harmonic embedding
    double sine30_max_scaled = 0.0;  // omega = 30 nets, max_abs / max|g|
    double relu_kink_fraction = 0.0;
    double seconds = 0.0;
    bool passed(double tol = 1e-5) const {
        return sine_max_rel < tol && relu_max_rel < tol && sine30_max_scaled < tol;
    }
};

GradSuite run_grad_suite(int nets_per_arch, std::uint64_t seed);

struct PropositionSuite {
    int instances = 0;
    int theorem_failures = 0;
    // Per-head variant, sampled under its stated condition.
    int variant_instances = 0;
    int variant_failures = 0;
    int corrected_instances = 0;
    int corrected_failures = 0;
    std::string first_counterexample;
    double seconds = 0.0;
};

PropositionSuite run_proposition_suite(int instances, std::uint64_t seed);

struct PartitionSuite {
    int masks_checked = 0;
    int failures = 0;
    std::vector<std::string> log;
};

/// PoS masks with exactly k labels, each 4-connected and covering the image;
/// PoG cell areas against closed-form grid arithmetic (given ks plus random strides).
PartitionSuite run_partition_suite(const std::vector<ImageField>& images, const std::vector<int>& ks,
                                   std::uint64_t seed);

struct ParsevalSuite {
    int images = 0;
    double max_rel_error = 0.0;
};

ParsevalSuite run_parseval_suite(int images, std::uint64_t seed);

}  // namespace pinr
