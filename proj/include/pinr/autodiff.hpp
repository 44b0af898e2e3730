#pragma once

// Reverse-mode differentiation for dense coordinate MLPs.
//
// Activations are kept feature-major internally (one column per sample) so
// every affine layer is a single GEMM; the public API takes and returns
// sample-major matrices (one row per sample).

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pinr/model_config.hpp"

namespace pinr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Layer {
    Matrix weight;  // out x in
    Vector bias;    // out
};

/// Parameters of one MLP. Layer i feeds layer i+1.
struct ParamSet {
    std::vector<Layer> layers;

    std::size_t size() const;
    bool all_finite() const;
    /// Throws ConfigError when consecutive layer shapes do not chain.
    void check_chain() const;
    bool same_shape(const ParamSet& other) const;

    static ParamSet zeros_like(const ParamSet& other);

    ParamSet& operator+=(const ParamSet& other);
    ParamSet& operator*=(double s);
    /// this += s * other
    void axpy(double s, const ParamSet& other);

    /// Flat view in layer order: weights (row-major) then bias, per layer.
    std::vector<double> flatten() const;
    void assign_flat(std::span<const double> flat);
    double& flat_at(std::size_t index);

    bool operator==(const ParamSet& other) const;
};

struct ForwardResult;

/// Cached activations of one forward pass. Can be consumed by backward() once.
class Tape {
public:
    bool consumed() const { return consumed_; }
    Eigen::Index batch_size() const { return batch_; }

private:
    friend ForwardResult forward(const ParamSet&, const ModelConfig&, const Matrix&);
    friend ParamSet backward(Tape&, const Matrix&);

    const ParamSet* net_ = nullptr;
    std::vector<Matrix> inputs_;      // input of each affine layer, features x B
    std::vector<Matrix> activation_d_; // d act / d pre-activation for every hidden layer
    Eigen::Index batch_ = 0;
    bool consumed_ = false;
};

struct ForwardResult {
    Matrix values;  // B x output_dim
    Tape tape;
};

/// Evaluates the network on `coords` (B x input_dim). Every layer except the
/// last is followed by the configured activation. The returned tape
/// references `net`, which must stay alive and unchanged until backward().
ForwardResult forward(const ParamSet& net, const ModelConfig& config, const Matrix& coords);

/// Output only; no tape is kept.
Matrix predict(const ParamSet& net, const ModelConfig& config, const Matrix& coords);

/// Gradient of sum(loss_grad .* output) with respect to every parameter.
ParamSet backward(Tape& tape, const Matrix& loss_grad);

enum class LossReduction : std::uint8_t { Mean = 0, Sum = 1 };

struct LossResult {
    double loss = 0.0;
    Matrix grad;  // d loss / d prediction, B x c
};

/// Squared error, averaged over all B*c entries (Mean) or summed (Sum).
LossResult mse_loss(const Matrix& prediction, const Matrix& target,
                    LossReduction reduction = LossReduction::Mean);

/// Loss value and exact parameter gradient for one batch.
struct LossAndGrad {
    double loss = 0.0;
    ParamSet grad;
    Matrix prediction;
};
LossAndGrad loss_and_grad(const ParamSet& net, const ModelConfig& config, const Matrix& coords,
                          const Matrix& target, LossReduction reduction = LossReduction::Mean);

using GradientFn = std::function<ParamSet(const ParamSet&, const ModelConfig&, const Matrix&,
                                          const Matrix&, LossReduction)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    /// max_abs_error divided by the largest analytic gradient magnitude.
    double max_scaled_error = 0.0;
    std::size_t checked = 0;
    /// ReLU parameters whose +-h probes flipped an activation; central
    /// differences are not valid across the kink, so these are not compared.
    std::size_t kinks_skipped = 0;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Compares analytic gradients with central differences (h = 1e-5) on the MSE
/// loss: max over parameters of |g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-12).
/// `gradient` overrides the analytic route (used to inject faults in tests).
/// For ReLU networks, parameters whose probes cross an activation kink are
/// skipped and counted.
GradCheckResult grad_check(const ParamSet& net, const ModelConfig& config, const Matrix& coords,
                           const Matrix& target, LossReduction reduction = LossReduction::Mean,
                           const GradientFn& gradient = {}, double h = 1e-5);

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig hp;
    ParamSet m;
    ParamSet v;
    std::int64_t t = 0;

    static AdamState init(const ParamSet& like, AdamConfig hp);
};

/// One bias-corrected Adam update. Throws TrainingError (step = t + 1) and leaves
/// `net` untouched if any gradient entry is non-finite.
void adam_step(ParamSet& net, const ParamSet& grads, AdamState& state);

// Weight file: "INRP", u32 version, u32 layer count, (u32 in, u32 out) per layer,
// u8 activation tag, f64 first-layer omega, then per layer row-major f64 weights
// followed by f64 biases. All little-endian.
inline constexpr std::uint32_t kWeightFormatVersion = 1;

struct WeightFile {
    ParamSet net;
    Arch arch = Arch::Sine;
    double omega_first = 0.0;
};

void save_weights(std::ostream& out, const ParamSet& net, const ModelConfig& config);
WeightFile load_weights(std::istream& in);
void save_weights(const std::string& path, const ParamSet& net, const ModelConfig& config);
WeightFile load_weights(const std::string& path);

namespace kernels {
// In place: z <- sin(omega * z), d <- omega * cos(omega * z_old).
void sine(double* z, double* d, std::size_t n, double omega);
// In place: z <- max(z, 0), d <- 1[z > 0].
void relu(double* z, double* d, std::size_t n);
// In place without derivative.
void sine_inplace(double* z, std::size_t n, double omega);
}  // namespace kernels

}  // namespace pinr
