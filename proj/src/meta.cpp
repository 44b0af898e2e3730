#include "pinr/meta.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "pinr/error.hpp"
#include "pinr/metrics.hpp"
#include "pinr/models.hpp"
#include "pinr/rng.hpp"

namespace pinr {

std::vector<double> MetaConfig::alpha_schedule() const {
    if (inner_steps < 1) throw ConfigError("inner_steps must be >= 1");
    if (alpha.empty()) throw ConfigError("alpha schedule is empty");
    std::vector<double> out = alpha;
    if (out.size() == 1) out.assign(static_cast<std::size_t>(inner_steps), alpha.front());
    if (out.size() != static_cast<std::size_t>(inner_steps))
        throw ConfigError("alpha schedule needs 1 or inner_steps entries");
    for (double a : out)
        if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("alpha entries must be finite and >= 0");
    return out;
}

MetaState MetaState::init(const MetaConfig& config) {
    config.model.validate();
    if (!(config.beta > 0.0)) throw ConfigError("beta must be positive");
    MetaState s;
    s.model = config.model;
    s.theta0 = build(config.model, config.seed);
    s.inner_steps = config.inner_steps;
    s.alpha = config.alpha_schedule();
    s.beta = config.beta;
    s.reduction = config.reduction;
    s.train_rule = config.train_rule;
    AdamConfig hp;
    hp.lr = config.beta;
    s.adam = AdamState::init(s.theta0, hp);
    return s;
}

namespace {

struct Region {
    Matrix coords;
    Matrix target;
    std::vector<std::int64_t> pixels;
};

// Plain tasks use the full coordinate grid directly; partitioned tasks gather
// each head's pixels through the mask.
std::vector<Region> task_regions(const Task& task, const ModelConfig& model) {
    if (task.image == nullptr) throw ConfigError("task without an image");
    const ImageField& img = *task.image;
    img.validate();
    if (model.output_dim != img.channels) throw ConfigError("model output_dim does not match image channels");
    const Matrix target = to_signed(img.as_matrix());
    std::vector<Region> regions;
    if (task.mask == nullptr) {
        Region r;
        r.coords = grid_coords(img.height, img.width);
        r.target = target;
        r.pixels.resize(img.pixel_count());
        std::iota(r.pixels.begin(), r.pixels.end(), std::int64_t{0});
        regions.push_back(std::move(r));
        return regions;
    }
    const PartitionMask& mask = *task.mask;
    if (mask.height() != img.height || mask.width() != img.width)
        throw ConfigError("mask dimensions do not match the image");
    validate_mask(mask);
    for (int h = 0; h < mask.k; ++h) {
        Region r;
        r.pixels = mask.pixels_of(h);
        r.coords = head_coords(mask, h, false);
        r.target.resize(static_cast<Eigen::Index>(r.pixels.size()), target.cols());
        for (std::size_t i = 0; i < r.pixels.size(); ++i)
            r.target.row(static_cast<Eigen::Index>(i)) = target.row(r.pixels[i]);
        regions.push_back(std::move(r));
    }
    return regions;
}

template <class Fn>
void run_parallel(int count, int threads, Fn&& fn) {
    int n = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    n = std::clamp(n, 1, std::max(count, 1));
    if (n == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t)
        pool.emplace_back([&] {
            for (int i; (i = next.fetch_add(1)) < count;) fn(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace

AdaptResult inner_adapt(const ParamSet& theta0, const ModelConfig& model, const Task& task,
                        const std::vector<double>& alpha, LossReduction reduction) {
    const auto regions = task_regions(task, model);
    AdaptResult out;
    out.meta_grad = ParamSet::zeros_like(theta0);
    for (std::size_t h = 0; h < regions.size(); ++h) {
        ParamSet theta = theta0;
        for (std::size_t i = 0; i <= alpha.size(); ++i) {
            auto lg = loss_and_grad(theta, model, regions[h].coords, regions[h].target, reduction);
            if (!std::isfinite(lg.loss) || !lg.grad.all_finite()) {
                out.ok = false;
                out.failure = "non-finite loss in head " + std::to_string(h) + " at inner step " + std::to_string(i);
                return out;
            }
            if (i == alpha.size()) {
                out.losses.push_back(lg.loss);
                out.meta_grad += lg.grad;
                break;
            }
            theta.axpy(-alpha[i], lg.grad);
        }
        out.heads.push_back(std::move(theta));
    }
    return out;
}

OuterStepReport outer_step(MetaState& state, const std::vector<Task>& batch, int threads) {
    if (batch.empty()) throw ConfigError("empty task batch");
    std::vector<AdaptResult> results(batch.size());
    std::vector<std::exception_ptr> errors(batch.size());
    run_parallel(static_cast<int>(batch.size()), threads, [&](int i) {
        try {
            results[static_cast<std::size_t>(i)] =
                inner_adapt(state.theta0, state.model, batch[static_cast<std::size_t>(i)], state.alpha, state.reduction);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    });
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    OuterStepReport rep;
    rep.meta_grad = ParamSet::zeros_like(state.theta0);
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        if (!r.ok) {
            ++rep.tasks_skipped;
            rep.log.push_back("task " + std::to_string(i) + " skipped: " + r.failure);
            continue;
        }
        ++rep.tasks_used;
        rep.meta_grad += r.meta_grad;
        for (double l : r.losses) loss_sum += l;
    }
    if (rep.tasks_used == 0) throw TrainingError("every task in the batch failed to adapt", state.outer_step + 1);
    rep.meta_grad *= 1.0 / rep.tasks_used;
    rep.mean_adapted_loss = loss_sum / rep.tasks_used;
    adam_step(state.theta0, rep.meta_grad, state.adam);
    ++state.outer_step;
    return rep;
}

MetaState meta_train(const std::vector<ImageField>& corpus, const std::vector<PartitionMask>& masks,
                     const MetaConfig& config, std::vector<double>* loss_trace) {
    MetaState state = MetaState::init(config);
    if (config.outer_steps < 0) throw ConfigError("outer_steps must be >= 0");
    if (config.outer_steps == 0) return state;
    if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (corpus.size() < static_cast<std::size_t>(config.batch_size))
        throw ConfigError("corpus has fewer images than the batch size");
    if (!masks.empty() && masks.size() != corpus.size()) throw ConfigError("need one mask per corpus image");

    std::mt19937_64 rng(derive_seed(config.seed, 1));
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Task> batch(static_cast<std::size_t>(config.batch_size));
    if (config.select_window < 0) throw ConfigError("select_window must be >= 0");
    std::optional<MetaState> best;
    double best_loss = std::numeric_limits<double>::infinity(), window_sum = 0.0;
    for (int step = 0; step < config.outer_steps; ++step) {
        // partial Fisher-Yates: the first batch_size entries are a uniform draw
        for (std::size_t i = 0; i < batch.size(); ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
            std::swap(order[i], order[pick(rng)]);
            batch[i].image = &corpus[order[i]];
            batch[i].mask = masks.empty() ? nullptr : &masks[order[i]];
        }
        auto rep = outer_step(state, batch, config.threads);
        if (loss_trace) loss_trace->push_back(rep.mean_adapted_loss);
        if (config.select_window > 0) {
            window_sum += rep.mean_adapted_loss;
            if ((step + 1) % config.select_window == 0) {
                if (window_sum < best_loss) {
                    best_loss = window_sum;
                    best = state;
                }
                window_sum = 0.0;
            }
        }
        if (config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0) {
            std::filesystem::create_directories(config.checkpoint_dir);
            save_meta_checkpoint(config.checkpoint_dir + "/meta_step_" + std::to_string(step + 1), state);
        }
    }
    return best ? *best : state;
}

FinetuneResult meta_finetune(const MetaState& state, const ImageField& image, const PartitionMask* mask, int views,
                             const std::vector<double>& alpha) {
    if (views < 0) throw ConfigError("views must be >= 0");
    std::vector<double> rates = alpha;
    if (rates.size() == 1 && views > 1) rates.assign(static_cast<std::size_t>(views), alpha.front());
    if (rates.size() < static_cast<std::size_t>(views)) throw ConfigError("alpha schedule shorter than views");
    const Task task{&image, mask};
    const auto regions = task_regions(task, state.model);
    const std::size_t channels = static_cast<std::size_t>(image.channels);

    FinetuneResult out;
    out.heads.assign(regions.size(), state.theta0);
    out.reconstruction = ImageField(image.height, image.width, image.channels);
    auto scatter = [&](std::size_t h, const Matrix& pred_signed) {
        const Matrix unit = to_unit(pred_signed);
        for (std::size_t i = 0; i < regions[h].pixels.size(); ++i)
            for (std::size_t c = 0; c < channels; ++c)
                out.reconstruction.values[static_cast<std::size_t>(regions[h].pixels[i]) * channels + c] =
                    unit(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
    };
    std::int64_t forwards = 0;
    for (int v = 0; v <= views; ++v) {
        for (std::size_t h = 0; h < regions.size(); ++h) {
            forwards += regions[h].coords.rows();
            if (v == views) {
                scatter(h, predict(out.heads[h], state.model, regions[h].coords));
                continue;
            }
            auto lg = loss_and_grad(out.heads[h], state.model, regions[h].coords, regions[h].target, state.reduction);
            if (!std::isfinite(lg.loss)) throw TrainingError("fine-tuning diverged", v + 1);
            scatter(h, lg.prediction);
            out.heads[h].axpy(-rates[static_cast<std::size_t>(v)], lg.grad);
        }
        const double p = psnr(out.reconstruction, image);
        out.psnr.push_back(p);
        out.report.psnr.push_back(p);
        out.report.loss.push_back(4.0 * std::pow(10.0, -p / 10.0));
    }
    out.report.steps_run = views;
    out.report.head_steps.assign(regions.size(), views);
    out.report.pixel_forwards = forwards;
    out.report.final_psnr = out.psnr.back();
    out.report.final_ssim = image.height >= 11 && image.width >= 11 ? ssim(out.reconstruction, image) : NAN;
    return out;
}

// ---------------------------------------------------------------------------
// checkpoints

void save_meta_checkpoint(const std::string& stem, const MetaState& state) {
    save_weights(stem + ".inrp", state.theta0, state.model);
    std::ofstream out(stem + ".meta");
    if (!out) throw IoError("cannot write " + stem + ".meta");
    out.precision(17);
    const ModelConfig& m = state.model;
    out << "inner_steps=" << state.inner_steps << "\nalpha=";
    for (std::size_t i = 0; i < state.alpha.size(); ++i) out << (i ? "," : "") << state.alpha[i];
    out << "\nbeta=" << state.beta << "\nouter_step=" << state.outer_step << "\ntrain_rule=" << state.train_rule
        << "\nreduction=" << (state.reduction == LossReduction::Sum ? "sum" : "mean") << "\narch=" << to_string(m.arch)
        << "\ninput_dim=" << m.input_dim << "\noutput_dim=" << m.output_dim << "\nhidden_features=" << m.hidden_features
        << "\nhidden_layers=" << m.hidden_layers << "\nomega_first=" << m.omega_first
        << "\nomega_hidden=" << m.omega_hidden << "\nn_harmonics=" << m.n_harmonics
        << "\nharmonic_schedule=" << to_string(m.schedule) << '\n';
}

MetaState load_meta_checkpoint(const std::string& stem) {
    std::ifstream in(stem + ".meta");
    if (!in) throw IoError("cannot open " + stem + ".meta");
    MetaState s;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        try {
            if (key == "inner_steps") s.inner_steps = std::stoi(value);
            else if (key == "alpha") {
                std::istringstream list(value);
                for (std::string item; std::getline(list, item, ',');) s.alpha.push_back(std::stod(item));
            } else if (key == "beta") s.beta = std::stod(value);
            else if (key == "outer_step") s.outer_step = std::stoll(value);
            else if (key == "train_rule") s.train_rule = value;
            else if (key == "reduction") s.reduction = value == "sum" ? LossReduction::Sum : LossReduction::Mean;
            else if (key == "arch") s.model.arch = arch_from_string(value);
            else if (key == "input_dim") s.model.input_dim = std::stoi(value);
            else if (key == "output_dim") s.model.output_dim = std::stoi(value);
            else if (key == "hidden_features") s.model.hidden_features = std::stoi(value);
            else if (key == "hidden_layers") s.model.hidden_layers = std::stoi(value);
            else if (key == "omega_first") s.model.omega_first = std::stod(value);
            else if (key == "omega_hidden") s.model.omega_hidden = std::stod(value);
            else if (key == "n_harmonics") s.model.n_harmonics = std::stoi(value);
            else if (key == "harmonic_schedule") s.model.schedule = schedule_from_string(value);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw IoError("malformed checkpoint line: " + line);
        }
    }
    s.model.validate();
    s.theta0 = load_weights(stem + ".inrp").net;
    AdamConfig hp;
    hp.lr = s.beta;
    s.adam = AdamState::init(s.theta0, hp);
    return s;
}

}  // namespace pinr
