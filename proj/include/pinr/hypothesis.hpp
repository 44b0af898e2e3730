#pragma once

// Synthetic +-1 signals with a known number of boundaries, convergence-step
// measurement, exponential fits n ~ p^N, and the partition complexity
// inequality sum_i p^{N_i} < p^{sum_i N_i}.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pinr/autodiff.hpp"

namespace pinr {

struct SignalSpec {
    int dim = 1;
    int n = 0;   // 1D boundary count
    int n1 = 0;  // 2D: boundaries along x
    int n2 = 0;  // 2D: boundaries along y
    std::uint64_t seed = 0;
    int train_points = 5000;  // 1D
    int test_points = 5000;   // 1D
    int grid = 256;           // 2D: grid x grid points, shared by train and test

    /// Boundary count: n in 1D, 2*n1*n2 + n1 + n2 in 2D.
    int total_boundaries() const;
};

struct SignalData {
    Matrix train_x, train_y;
    Matrix test_x, test_y;
    std::vector<double> bx;  // boundary positions along x (1D: all boundaries)
    std::vector<double> by;  // along y (2D only)
};

/// +-1 signal that starts at +1 at the domain's low corner and flips sign at
/// every boundary. 1D: train points uniform random, test points evenly spaced;
/// boundaries are kept more than one test spacing apart so every one is
/// resolved. 2D: axis-aligned boundary lines, grid x grid points.
SignalData gen_signal(const SignalSpec& spec);

/// Closest factor pair (n1 <= n2) of m.
std::pair<int, int> close_factors(int m);

/// Sign changes along the rows of a sorted 1D sample.
int count_sign_changes(const Matrix& y);

struct ConvergenceOptions {
    double lr = 1e-3;
    double threshold = 0.05;
    int cap = 50000;
};

struct ConvergenceResult {
    int steps = 0;  // first epoch with test MSE < threshold, or the cap
    bool censored = false;
    bool diverged = false;
};

/// Full-batch Adam on the train set; test MSE is checked after every epoch.
ConvergenceResult measure_convergence(const SignalData& data, const ModelConfig& config,
                                      const ConvergenceOptions& options, std::uint64_t seed);

/// SIREN for synthetic signals: 32 hidden features, 3 hidden layers, first
/// omega 10 (1D) or 30 (2D), hidden omega 30.
ModelConfig signal_model(int dim);

struct ExponentFit {
    double p = 1.0;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Least squares of log(steps) on N; p = exp(slope). Needs >= 3 distinct N.
ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& points);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct PropositionCheck {
    bool applicable = false;
    std::string reason;  // why not applicable
    bool holds = false;  // lhs < rhs, no tolerance
    long double log_lhs = 0.0L;
    long double log_rhs = 0.0L;
    /// Linear-scale values (may be +inf for huge exponents).
    long double lhs = 0.0L;
    long double rhs = 0.0L;
    /// Variant only: the originally stated sufficient condition and the corrected one.
    bool stated_condition = false;
    bool corrected_condition = false;
};

/// sum_i p^{N_i} versus p^{sum N_i}; requires p > 1, k >= 3, p^{N_i} >= 2.
PropositionCheck verify_proposition(double p, const std::vector<int>& counts);

/// Smaller-head variant: sum_i p_i^{N_i} versus p^{sum N_i} with every
/// p_i > p. Applicable when p > 1, k >= 3, p^{N_i} >= 2 and
/// (p / p_hat) * 2^(k-1) > k. `corrected_condition` reports
/// (p / p_hat)^{N_hat} * 2^(k-1) > k, which implies the inequality.
PropositionCheck verify_proposition_smaller(double p, const std::vector<double>& head_p,
                                            const std::vector<int>& counts);

struct SweepRow {
    int dim = 1;
    int n = 0;
    std::uint64_t seed = 0;
    ConvergenceResult result;
};

struct HypothesisReport {
    std::vector<SweepRow> rows;
    std::vector<int> ns;            // distinct N in sweep order
    std::vector<double> mean_steps; // over uncensored runs, per N (NaN if none)
    std::vector<double> std_steps;
    std::vector<int> censored;      // censored runs per N
    ExponentFit fit;
    bool fit_ok = false;
    double spearman_rho = 0.0;
};

struct SweepConfig {
    int dim = 1;
    std::vector<int> ns{1, 5, 10, 20, 30, 40};  // 1D counts, or 2D values of M
    int seeds = 3;
    std::uint64_t base_seed = 0;
    ConvergenceOptions convergence{};
    int threads = 0;

    /// "desk" or "full" presets for dim 1 or 2.
    static SweepConfig preset(const std::string& name, int dim);
};

/// Runs every (N, seed) cell, then fits the exponent to per-N mean steps.
HypothesisReport run_sweep(const SweepConfig& config);

/// CSV "dim,N,seed,steps,censored,diverged".
void write_sweep_csv(std::ostream& out, const HypothesisReport& report);
/// One line: p, R^2, Spearman, counts.
std::string sweep_summary(const HypothesisReport& report);

}  // namespace pinr
