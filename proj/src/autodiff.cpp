#include "pinr/autodiff.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "pinr/error.hpp"
#include "pinr/models.hpp"

namespace pinr {

// ---------------------------------------------------------------------------
// ParamSet

std::size_t ParamSet::size() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

bool ParamSet::all_finite() const {
    for (const auto& l : layers) {
        if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
}

void ParamSet::check_chain() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.bias.size() != l.weight.rows())
            throw ConfigError("layer " + std::to_string(i) + ": bias size does not match weight rows");
        if (i + 1 < layers.size() && layers[i + 1].weight.cols() != l.weight.rows())
            throw ConfigError("layer " + std::to_string(i) + " output does not chain into layer " +
                              std::to_string(i + 1));
    }
}

bool ParamSet::same_shape(const ParamSet& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].weight.rows() != other.layers[i].weight.rows() ||
            layers[i].weight.cols() != other.layers[i].weight.cols() ||
            layers[i].bias.size() != other.layers[i].bias.size())
            return false;
    }
    return true;
}

ParamSet ParamSet::zeros_like(const ParamSet& other) {
    ParamSet out;
    out.layers.reserve(other.layers.size());
    for (const auto& l : other.layers)
        out.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    return out;
}

ParamSet& ParamSet::operator+=(const ParamSet& other) {
    axpy(1.0, other);
    return *this;
}

ParamSet& ParamSet::operator*=(double s) {
    for (auto& l : layers) {
        l.weight *= s;
        l.bias *= s;
    }
    return *this;
}

void ParamSet::axpy(double s, const ParamSet& other) {
    if (!same_shape(other)) throw ConfigError("parameter sets differ in shape");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].weight += s * other.layers[i].weight;
        layers[i].bias += s * other.layers[i].bias;
    }
}

std::vector<double> ParamSet::flatten() const {
    std::vector<double> flat;
    flat.reserve(size());
    for (const auto& l : layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat.push_back(l.weight(r, c));
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat.push_back(l.bias(r));
    }
    return flat;
}

void ParamSet::assign_flat(std::span<const double> flat) {
    if (flat.size() != size()) throw ConfigError("flat parameter vector has the wrong length");
    std::size_t k = 0;
    for (auto& l : layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[k++];
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat[k++];
    }
}

double& ParamSet::flat_at(std::size_t index) {
    for (auto& l : layers) {
        const auto nw = static_cast<std::size_t>(l.weight.size());
        if (index < nw) {
            const auto cols = static_cast<std::size_t>(l.weight.cols());
            return l.weight(static_cast<Eigen::Index>(index / cols), static_cast<Eigen::Index>(index % cols));
        }
        index -= nw;
        const auto nb = static_cast<std::size_t>(l.bias.size());
        if (index < nb) return l.bias(static_cast<Eigen::Index>(index));
        index -= nb;
    }
    throw ConfigError("flat parameter index out of range");
}

bool ParamSet::operator==(const ParamSet& other) const {
    if (!same_shape(other)) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].weight != other.layers[i].weight || layers[i].bias != other.layers[i].bias) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// forward / backward

namespace {

// The layer count comes from the network itself; every layer but the last is
// followed by the configured activation.
void check_net(const ParamSet& net, const ModelConfig& config) {
    if (net.layers.empty()) throw ConfigError("network has no layers");
    net.check_chain();
    if (net.layers.front().weight.cols() != config.embedded_dim())
        throw ConfigError("first layer input width does not match the configured input");
    if (net.layers.back().weight.rows() != config.output_dim)
        throw ConfigError("last layer width does not match output_dim");
}

Matrix network_input(const ModelConfig& config, const Matrix& coords) {
    if (coords.cols() != config.input_dim)
        throw ConfigError("coordinates have " + std::to_string(coords.cols()) + " columns, expected " +
                          std::to_string(config.input_dim));
    if (!coords.allFinite()) throw InputError("non-finite coordinate");
    if (config.arch == Arch::ReluPe) return embed_harmonic(coords, config.n_harmonics, config.schedule).transpose();
    return coords.transpose();
}

double layer_omega(const ModelConfig& config, std::size_t layer) {
    return layer == 0 ? config.omega_first : config.omega_hidden;
}

// z <- W x + b, feature-major.
void affine(const Layer& layer, const Matrix& x, Matrix& z) {
    z.noalias() = layer.weight * x;
    z.colwise() += layer.bias;
}

}  // namespace

ForwardResult forward(const ParamSet& net, const ModelConfig& config, const Matrix& coords) {
    check_net(net, config);
    ForwardResult result;
    Tape& tape = result.tape;
    tape.net_ = &net;
    tape.batch_ = coords.rows();
    const std::size_t n_layers = net.layers.size();
    tape.inputs_.resize(n_layers);
    tape.activation_d_.resize(n_layers - 1);

    tape.inputs_[0] = network_input(config, coords);
    for (std::size_t i = 0; i + 1 < n_layers; ++i) {
        Matrix z;
        affine(net.layers[i], tape.inputs_[i], z);
        Matrix& d = tape.activation_d_[i];
        d.resize(z.rows(), z.cols());
        const auto n = static_cast<std::size_t>(z.size());
        if (config.arch == Arch::Sine)
            kernels::sine(z.data(), d.data(), n, layer_omega(config, i));
        else
            kernels::relu(z.data(), d.data(), n);
        tape.inputs_[i + 1] = std::move(z);
    }
    Matrix out;
    affine(net.layers.back(), tape.inputs_.back(), out);
    result.values = out.transpose();
    return result;
}

namespace {

// Output-only evaluation. When `relu_pattern` is given, records which ReLU
// units are active so callers can detect finite-difference steps across a kink.
Matrix evaluate(const ParamSet& net, const ModelConfig& config, const Matrix& coords,
                std::vector<std::uint8_t>* relu_pattern) {
    check_net(net, config);
    Matrix x = network_input(config, coords);
    const std::size_t n_layers = net.layers.size();
    if (relu_pattern) relu_pattern->clear();
    for (std::size_t i = 0; i + 1 < n_layers; ++i) {
        Matrix z;
        affine(net.layers[i], x, z);
        const auto n = static_cast<std::size_t>(z.size());
        if (config.arch == Arch::Sine) {
            kernels::sine_inplace(z.data(), n, layer_omega(config, i));
        } else {
            if (relu_pattern)
                for (std::size_t k = 0; k < n; ++k) relu_pattern->push_back(z.data()[k] > 0.0 ? 1 : 0);
            z = z.cwiseMax(0.0);
        }
        x = std::move(z);
    }
    Matrix out;
    affine(net.layers.back(), x, out);
    return out.transpose();
}

}  // namespace

Matrix predict(const ParamSet& net, const ModelConfig& config, const Matrix& coords) {
    return evaluate(net, config, coords, nullptr);
}

ParamSet backward(Tape& tape, const Matrix& loss_grad) {
    if (tape.consumed_) throw UsageError("tape has already been used for a backward pass");
    if (tape.net_ == nullptr) throw UsageError("tape was not produced by forward()");
    const ParamSet& net = *tape.net_;
    if (loss_grad.rows() != tape.batch_ || loss_grad.cols() != net.layers.back().weight.rows())
        throw ConfigError("loss gradient shape does not match the forward output");
    if (!loss_grad.allFinite()) throw InputError("non-finite loss gradient");
    tape.consumed_ = true;

    ParamSet grads = ParamSet::zeros_like(net);
    Matrix g = loss_grad.transpose();  // out x B
    for (std::size_t i = net.layers.size(); i-- > 0;) {
        grads.layers[i].weight.noalias() = g * tape.inputs_[i].transpose();
        grads.layers[i].bias = g.rowwise().sum();
        if (i == 0) break;
        Matrix upstream;
        upstream.noalias() = net.layers[i].weight.transpose() * g;
        g = upstream.cwiseProduct(tape.activation_d_[i - 1]);
    }
    tape.inputs_.clear();
    tape.activation_d_.clear();
    return grads;
}

LossResult mse_loss(const Matrix& prediction, const Matrix& target, LossReduction reduction) {
    if (prediction.rows() != target.rows() || prediction.cols() != target.cols())
        throw ConfigError("prediction and target shapes differ");
    LossResult r;
    const Matrix diff = prediction - target;
    const double scale = reduction == LossReduction::Mean ? 1.0 / static_cast<double>(diff.size()) : 1.0;
    r.loss = diff.squaredNorm() * scale;
    r.grad = (2.0 * scale) * diff;
    return r;
}

LossAndGrad loss_and_grad(const ParamSet& net, const ModelConfig& config, const Matrix& coords,
                          const Matrix& target, LossReduction reduction) {
    auto fwd = forward(net, config, coords);
    auto loss = mse_loss(fwd.values, target, reduction);
    LossAndGrad out;
    out.loss = loss.loss;
    out.grad = backward(fwd.tape, loss.grad);
    out.prediction = std::move(fwd.values);
    return out;
}

namespace {

// Loss evaluated in extended precision, one sample at a time. Central
// differences of a double-precision loss lose about eps * |L| / h to round-off,
// which swamps gradients below ~1e-6; the wider accumulator keeps the
// comparison meaningful there. Also records the ReLU activation pattern.
long double extended_loss(const ParamSet& net, const ModelConfig& config, const Matrix& input,
                          const Matrix& target, LossReduction reduction, std::vector<std::uint8_t>* pattern) {
    using ld = long double;
    if (pattern) pattern->clear();
    const std::size_t n_layers = net.layers.size();
    std::vector<ld> x, y;
    ld total = 0.0L;
    for (Eigen::Index b = 0; b < input.rows(); ++b) {
        x.assign(static_cast<std::size_t>(input.cols()), 0.0L);
        for (Eigen::Index j = 0; j < input.cols(); ++j) x[static_cast<std::size_t>(j)] = input(b, j);
        for (std::size_t i = 0; i < n_layers; ++i) {
            const Layer& layer = net.layers[i];
            const bool last = i + 1 == n_layers;
            const ld omega = layer_omega(config, i);
            y.assign(static_cast<std::size_t>(layer.weight.rows()), 0.0L);
            for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
                ld acc = layer.bias(r);
                for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
                    acc += static_cast<ld>(layer.weight(r, c)) * x[static_cast<std::size_t>(c)];
                if (!last) {
                    if (config.arch == Arch::Sine) {
                        acc = std::sin(omega * acc);
                    } else {
                        if (pattern) pattern->push_back(acc > 0.0L ? 1 : 0);
                        acc = acc > 0.0L ? acc : 0.0L;
                    }
                }
                y[static_cast<std::size_t>(r)] = acc;
            }
            std::swap(x, y);
        }
        for (Eigen::Index c = 0; c < target.cols(); ++c) {
            const ld d = x[static_cast<std::size_t>(c)] - static_cast<ld>(target(b, c));
            total += d * d;
        }
    }
    if (reduction == LossReduction::Mean) total /= static_cast<ld>(target.size());
    return total;
}

}  // namespace

GradCheckResult grad_check(const ParamSet& net, const ModelConfig& config, const Matrix& coords,
                           const Matrix& target, LossReduction reduction, const GradientFn& gradient,
                           double h) {
    const ParamSet analytic = gradient ? gradient(net, config, coords, target, reduction)
                                       : loss_and_grad(net, config, coords, target, reduction).grad;
    const std::vector<double> g_ad = analytic.flatten();
    check_net(net, config);
    const Matrix input = network_input(config, coords).transpose();
    ParamSet probe = net;
    const bool guard_kinks = config.arch == Arch::ReluPe;
    std::vector<std::uint8_t> base_pattern, pattern;
    if (guard_kinks) extended_loss(net, config, input, target, reduction, &base_pattern);
    bool crossed = false;
    auto loss_at = [&](const ParamSet& p) {
        const long double l = extended_loss(p, config, input, target, reduction, guard_kinks ? &pattern : nullptr);
        if (guard_kinks && pattern != base_pattern) crossed = true;
        return l;
    };

    GradCheckResult result;
    double max_grad = 0.0;
    for (std::size_t k = 0; k < g_ad.size(); ++k) {
        double& slot = probe.flat_at(k);
        const double saved = slot;
        crossed = false;
        slot = saved + h;
        const long double up = loss_at(probe);
        slot = saved - h;
        const long double down = loss_at(probe);
        slot = saved;
        if (crossed) {
            ++result.kinks_skipped;
            continue;
        }
        const auto g_fd = static_cast<double>((up - down) / (2.0L * h));
        const double denom = std::max({std::abs(g_ad[k]), std::abs(g_fd), 1e-12});
        const double abs_err = std::abs(g_ad[k] - g_fd);
        const double rel = abs_err / denom;
        result.max_abs_error = std::max(result.max_abs_error, abs_err);
        max_grad = std::max(max_grad, std::abs(g_ad[k]));
        if (result.checked == 0 || rel > result.max_rel_error) {
            result.max_rel_error = rel;
            result.worst_index = k;
            result.worst_analytic = g_ad[k];
            result.worst_numeric = g_fd;
        }
        ++result.checked;
    }
    result.max_scaled_error = result.max_abs_error / std::max(max_grad, 1e-300);
    return result;
}

// ---------------------------------------------------------------------------
// Adam

AdamState AdamState::init(const ParamSet& like, AdamConfig hp) {
    AdamState s;
    s.hp = hp;
    s.m = ParamSet::zeros_like(like);
    s.v = ParamSet::zeros_like(like);
    return s;
}

void adam_step(ParamSet& net, const ParamSet& grads, AdamState& state) {
    if (!net.same_shape(grads) || !net.same_shape(state.m))
        throw ConfigError("Adam: parameter, gradient and moment shapes differ");
    if (state.t < 0) throw ConfigError("Adam: negative step counter");
    if (!grads.all_finite()) throw TrainingError("non-finite gradient", state.t + 1);

    const auto& hp = state.hp;
    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(hp.beta1, t);
    const double c2 = 1.0 - std::pow(hp.beta2, t);

    auto update = [&](double* p, const double* g, double* m, double* v, Eigen::Index n) {
        for (Eigen::Index i = 0; i < n; ++i) {
            m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g[i];
            v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            p[i] -= hp.lr * m_hat / (std::sqrt(v_hat) + hp.eps);
        }
    };
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        auto& l = net.layers[i];
        update(l.weight.data(), grads.layers[i].weight.data(), state.m.layers[i].weight.data(),
               state.v.layers[i].weight.data(), l.weight.size());
        update(l.bias.data(), grads.layers[i].bias.data(), state.m.layers[i].bias.data(),
               state.v.layers[i].bias.data(), l.bias.size());
    }
    if (!net.all_finite()) throw TrainingError("parameters became non-finite", state.t);
}

// ---------------------------------------------------------------------------
// Weight file

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::ostream& out, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw IoError("weight file truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

}  // namespace

void save_weights(std::ostream& out, const ParamSet& net, const ModelConfig& config) {
    net.check_chain();
    out.write("INRP", 4);
    put_le<std::uint32_t>(out, kWeightFormatVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers.size()));
    for (const auto& l : net.layers) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.weight.cols()));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.weight.rows()));
    }
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(config.arch));
    put_le<double>(out, config.omega_first);
    for (const auto& l : net.layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) put_le<double>(out, l.weight(r, c));
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) put_le<double>(out, l.bias(r));
    }
    if (!out) throw IoError("failed writing weight file");
}

WeightFile load_weights(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "INRP", 4) != 0) throw IoError("not an INRP weight file");
    const auto version = get_le<std::uint32_t>(in);
    if (version != kWeightFormatVersion) throw IoError("unsupported weight file version " + std::to_string(version));
    const auto count = get_le<std::uint32_t>(in);
    if (count == 0 || count > 4096) throw IoError("implausible layer count in weight file");
    std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes(count);
    for (auto& [fan_in, fan_out] : shapes) {
        fan_in = get_le<std::uint32_t>(in);
        fan_out = get_le<std::uint32_t>(in);
    }
    WeightFile wf;
    const auto tag = get_le<std::uint8_t>(in);
    if (tag > 1) throw IoError("unknown activation tag " + std::to_string(tag));
    wf.arch = static_cast<Arch>(tag);
    wf.omega_first = get_le<double>(in);
    for (const auto& [fan_in, fan_out] : shapes) {
        Layer l{Matrix(fan_out, fan_in), Vector(fan_out)};
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = get_le<double>(in);
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = get_le<double>(in);
        wf.net.layers.push_back(std::move(l));
    }
    wf.net.check_chain();
    return wf;
}

void save_weights(const std::string& path, const ParamSet& net, const ModelConfig& config) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    save_weights(out, net, config);
}

WeightFile load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return load_weights(in);
}

}  // namespace pinr
