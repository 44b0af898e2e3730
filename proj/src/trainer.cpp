#include "pinr/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include "pinr/error.hpp"
#include "pinr/metrics.hpp"
#include "pinr/models.hpp"
#include "pinr/rng.hpp"

namespace pinr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct HeadRun {
    ParamSet net;
    std::vector<double> sse;  // estimated sum of squared errors over the region, per step
    int steps = 0;
    double seconds = 0.0;
    std::int64_t forwards = 0;
};

Matrix gather_rows(const Matrix& m, const std::vector<std::int64_t>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

HeadRun train_head(const Matrix& coords, const Matrix& target, const ModelConfig& config, std::uint64_t stream_seed,
                   const FitOptions& opt) {
    const auto t0 = Clock::now();
    HeadRun run;
    run.net = build(config, stream_seed);
    AdamState adam = AdamState::init(run.net, opt.adam);
    std::mt19937_64 sampler(mix_seed(stream_seed ^ 0xA5A5A5A5ULL));

    const Eigen::Index n = coords.rows();
    const bool full = opt.batch_pixels <= 0 || opt.batch_pixels >= n;
    const double region_entries = static_cast<double>(target.size());
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    Matrix batch_x, batch_y;
    double best_psnr = -std::numeric_limits<double>::infinity();
    int since_best = 0;

    for (int step = 0; step < opt.steps; ++step) {
        const Matrix* x = &coords;
        const Matrix* y = &target;
        if (!full) {
            batch_x.resize(opt.batch_pixels, coords.cols());
            batch_y.resize(opt.batch_pixels, target.cols());
            for (Eigen::Index i = 0; i < opt.batch_pixels; ++i) {
                const Eigen::Index r = pick(sampler);
                batch_x.row(i) = coords.row(r);
                batch_y.row(i) = target.row(r);
            }
            x = &batch_x;
            y = &batch_y;
        }
        auto lg = loss_and_grad(run.net, config, *x, *y, opt.reduction);
        run.forwards += x->rows();
        if (!std::isfinite(lg.loss)) throw TrainingError("loss diverged", step + 1);
        const double mse = opt.reduction == LossReduction::Mean ? lg.loss : lg.loss / static_cast<double>(y->size());
        run.sse.push_back(mse * region_entries);
        adam_step(run.net, lg.grad, adam);
        ++run.steps;

        if (opt.patience > 0) {
            const double db = psnr_from_mse(mse / 4.0);
            if (db > best_psnr + opt.plateau_db) {
                best_psnr = db;
                since_best = 0;
            } else if (++since_best >= opt.patience) {
                break;
            }
        }
    }
    run.seconds = seconds_since(t0);
    return run;
}

std::vector<ModelConfig> expand_configs(const std::vector<ModelConfig>& configs, int k, int channels) {
    if (configs.empty()) throw ConfigError("no head configuration given");
    if (configs.size() != 1 && configs.size() != static_cast<std::size_t>(k))
        throw ConfigError("expected 1 or " + std::to_string(k) + " head configurations, got " +
                          std::to_string(configs.size()));
    std::vector<ModelConfig> out(static_cast<std::size_t>(k), configs.front());
    if (configs.size() == static_cast<std::size_t>(k)) out = configs;
    for (const auto& c : out) {
        c.validate();
        if (c.input_dim != 2) throw ConfigError("image fitting needs input_dim = 2");
        if (c.output_dim != channels)
            throw ConfigError("output_dim " + std::to_string(c.output_dim) + " does not match the image's " +
                              std::to_string(channels) + " channels");
    }
    return out;
}

}  // namespace

Matrix head_coords(const PartitionMask& mask, int head, bool local_coords) {
    const auto pixels = mask.pixels_of(head);
    if (pixels.empty()) throw ConfigError("head " + std::to_string(head) + " has an empty region");
    const int w = mask.width(), h = mask.height();
    int x0 = w, x1 = -1, y0 = h, y1 = -1;
    if (local_coords)
        for (auto p : pixels) {
            const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    Matrix c(static_cast<Eigen::Index>(pixels.size()), 2);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const int x = static_cast<int>(pixels[i] % w), y = static_cast<int>(pixels[i] / w);
        const auto r = static_cast<Eigen::Index>(i);
        if (local_coords) {
            c(r, 0) = normalized_coord(x - x0, x1 - x0 + 1);
            c(r, 1) = normalized_coord(y - y0, y1 - y0 + 1);
        } else {
            c(r, 0) = normalized_coord(x, w);
            c(r, 1) = normalized_coord(y, h);
        }
    }
    return c;
}

FitResult fit_single(const ImageField& image, const ModelConfig& config, const FitOptions& options) {
    return fit_partitioned(image, whole_mask(image.height, image.width), {config}, options);
}

FitResult fit_partitioned(const ImageField& image, const PartitionMask& mask,
                          const std::vector<ModelConfig>& configs, const FitOptions& options) {
    image.validate();
    if (options.steps < 1) throw ConfigError("steps must be >= 1");
    if (mask.height() != image.height || mask.width() != image.width)
        throw ConfigError("mask dimensions do not match the image");
    validate_mask(mask);
    const int k = mask.k;
    FitResult result;
    result.configs = expand_configs(configs, k, image.channels);
    result.mask = mask;

    const auto t0 = Clock::now();
    const Matrix target_all = to_signed(image.as_matrix());
    std::vector<HeadRun> runs(static_cast<std::size_t>(k));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int head; (head = next.fetch_add(1)) < k;) {
            try {
                const Matrix coords = head_coords(mask, head, options.local_coords);
                const Matrix target = gather_rows(target_all, mask.pixels_of(head));
                runs[static_cast<std::size_t>(head)] =
                    train_head(coords, target, result.configs[static_cast<std::size_t>(head)],
                               derive_seed(options.seed, static_cast<std::uint64_t>(head)), options);
            } catch (...) {
                errors[static_cast<std::size_t>(head)] = std::current_exception();
            }
        }
    };
    int threads = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, k);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    FitReport& rep = result.report;
    int longest = 0;
    for (const auto& r : runs) longest = std::max(longest, r.steps);
    const double entries = static_cast<double>(target_all.size());
    for (int s = 0; s < longest; ++s) {
        double sse = 0.0;
        for (const auto& r : runs) sse += r.sse[static_cast<std::size_t>(std::min(s, r.steps - 1))];
        const double mse = sse / entries;
        rep.loss.push_back(mse);
        rep.psnr.push_back(psnr_from_mse(mse / 4.0));
    }
    rep.steps_run = longest;
    for (auto& r : runs) {
        rep.head_steps.push_back(r.steps);
        rep.head_seconds.push_back(r.seconds);
        rep.pixel_forwards += r.forwards;
        result.heads.push_back(std::move(r.net));
    }
    result.reconstruction =
        predict_partitioned(result.heads, result.configs, mask, image.channels, options.local_coords);
    rep.final_psnr = psnr(result.reconstruction, image);
    rep.final_ssim = options.final_ssim && image.height >= 11 && image.width >= 11
                         ? ssim(result.reconstruction, image)
                         : std::numeric_limits<double>::quiet_NaN();
    rep.seconds = seconds_since(t0);
    return result;
}

ImageField predict_partitioned(const std::vector<ParamSet>& heads, const std::vector<ModelConfig>& configs,
                               const PartitionMask& mask, int channels, bool local_coords) {
    const int k = mask.k;
    if (heads.size() != static_cast<std::size_t>(k)) throw ConfigError("head count does not match the mask");
    const auto cfgs = expand_configs(configs, k, channels);
    ImageField out(mask.height(), mask.width(), channels);
    for (int head = 0; head < k; ++head) {
        const auto pixels = mask.pixels_of(head);
        const Matrix pred = to_unit(predict(heads[static_cast<std::size_t>(head)], cfgs[static_cast<std::size_t>(head)],
                                            head_coords(mask, head, local_coords)));
        for (std::size_t i = 0; i < pixels.size(); ++i)
            for (int c = 0; c < channels; ++c)
                out.values[static_cast<std::size_t>(pixels[i]) * static_cast<std::size_t>(channels) +
                           static_cast<std::size_t>(c)] = pred(static_cast<Eigen::Index>(i), c);
    }
    return out;
}

void write_fit_csv(std::ostream& out, const FitReport& report) {
    out << "step,loss,psnr\n";
    out.precision(17);
    for (std::size_t i = 0; i < report.loss.size(); ++i)
        out << i + 1 << ',' << report.loss[i] << ',' << psnr_capped(report.psnr[i]) << '\n';
}

}  // namespace pinr
