#include "pinr/hypothesis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "pinr/error.hpp"
#include "pinr/image.hpp"
#include "pinr/models.hpp"
#include "pinr/rng.hpp"

namespace pinr {

int SignalSpec::total_boundaries() const { return dim == 1 ? n : 2 * n1 * n2 + n1 + n2; }

namespace {

// Sorted positions in (-1, 1), consecutive ones more than `min_gap` apart.
std::vector<double> sample_boundaries(int count, double min_gap, std::mt19937_64& rng) {
    if (count < 0) throw ConfigError("boundary count must be >= 0");
    if (count * min_gap >= 1.0) throw ConfigError("too many boundaries for the sampling resolution");
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> b(static_cast<std::size_t>(count));
    for (int attempt = 0; attempt < 100000; ++attempt) {
        for (double& v : b) v = u(rng);
        std::sort(b.begin(), b.end());
        bool ok = true;
        for (std::size_t i = 1; i < b.size() && ok; ++i) ok = b[i] - b[i - 1] > min_gap;
        if (ok) return b;
    }
    throw ConfigError("could not place boundaries with the required spacing");
}

double sign_at(double x, const std::vector<double>& boundaries) {
    const auto crossed = std::lower_bound(boundaries.begin(), boundaries.end(), x) - boundaries.begin();
    return crossed % 2 == 0 ? 1.0 : -1.0;
}

}  // namespace

SignalData gen_signal(const SignalSpec& spec) {
    SignalData d;
    std::mt19937_64 brng(derive_seed(spec.seed, 1));
    std::mt19937_64 xrng(derive_seed(spec.seed, 2));
    if (spec.dim == 1) {
        if (spec.train_points < 1 || spec.test_points < 2) throw ConfigError("need train and test points");
        d.bx = sample_boundaries(spec.n, 2.0 / (spec.test_points - 1), brng);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        d.train_x.resize(spec.train_points, 1);
        d.train_y.resize(spec.train_points, 1);
        for (int i = 0; i < spec.train_points; ++i) {
            d.train_x(i, 0) = u(xrng);
            d.train_y(i, 0) = sign_at(d.train_x(i, 0), d.bx);
        }
        d.test_x.resize(spec.test_points, 1);
        d.test_y.resize(spec.test_points, 1);
        for (int i = 0; i < spec.test_points; ++i) {
            d.test_x(i, 0) = normalized_coord(i, spec.test_points);
            d.test_y(i, 0) = sign_at(d.test_x(i, 0), d.bx);
        }
        return d;
    }
    if (spec.dim != 2) throw ConfigError("signal dim must be 1 or 2");
    if (spec.grid < 2) throw ConfigError("grid must be >= 2");
    const double gap = 2.0 / (spec.grid - 1);
    d.bx = sample_boundaries(spec.n1, gap, brng);
    d.by = sample_boundaries(spec.n2, gap, brng);
    d.train_x = grid_coords(spec.grid, spec.grid);
    d.train_y.resize(d.train_x.rows(), 1);
    for (Eigen::Index r = 0; r < d.train_x.rows(); ++r)
        d.train_y(r, 0) = sign_at(d.train_x(r, 0), d.bx) * sign_at(d.train_x(r, 1), d.by);
    d.test_x = d.train_x;
    d.test_y = d.train_y;
    return d;
}

std::pair<int, int> close_factors(int m) {
    if (m < 1) throw ConfigError("M must be >= 1");
    int a = static_cast<int>(std::sqrt(static_cast<double>(m)));
    while (a > 1 && m % a != 0) --a;
    return {a, m / a};
}

int count_sign_changes(const Matrix& y) {
    int changes = 0;
    for (Eigen::Index i = 1; i < y.rows(); ++i)
        if ((y(i, 0) > 0) != (y(i - 1, 0) > 0)) ++changes;
    return changes;
}

ModelConfig signal_model(int dim) {
    ModelConfig c;
    c.arch = Arch::Sine;
    c.input_dim = dim;
    c.output_dim = 1;
    c.hidden_features = 32;
    c.hidden_layers = 3;
    c.omega_first = dim == 1 ? 10.0 : 30.0;
    c.omega_hidden = 30.0;
    return c;
}

ConvergenceResult measure_convergence(const SignalData& data, const ModelConfig& config,
                                      const ConvergenceOptions& options, std::uint64_t seed) {
    if (!(options.threshold > 0.0)) throw ConfigError("threshold must be positive");
    if (options.cap < 1) throw ConfigError("cap must be >= 1");
    ParamSet net = build(config, seed);
    AdamConfig hp;
    hp.lr = options.lr;
    AdamState adam = AdamState::init(net, hp);
    ConvergenceResult r;
    for (int epoch = 1; epoch <= options.cap; ++epoch) {
        auto lg = loss_and_grad(net, config, data.train_x, data.train_y);
        if (!std::isfinite(lg.loss) || !lg.grad.all_finite()) {
            r.diverged = r.censored = true;
            r.steps = epoch;
            return r;
        }
        adam_step(net, lg.grad, adam);
        const double test_mse = mse_loss(predict(net, config, data.test_x), data.test_y).loss;
        if (!std::isfinite(test_mse)) {
            r.diverged = r.censored = true;
            r.steps = epoch;
            return r;
        }
        if (test_mse < options.threshold) {
            r.steps = epoch;
            return r;
        }
    }
    r.steps = options.cap;
    r.censored = true;
    return r;
}

ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& points) {
    std::vector<double> xs, ys;
    for (const auto& [n, steps] : points) {
        if (!(steps > 0.0) || !std::isfinite(steps)) throw InputError("steps must be positive and finite");
        xs.push_back(n);
        ys.push_back(std::log(steps));
    }
    std::vector<double> distinct = xs;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 3) throw InputError("exponent fit needs at least 3 distinct N");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    ExponentFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.p = std::exp(f.slope);
    f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = r;
        i = j + 1;
    }
    return rank;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InputError("spearman needs two equal-length series");
    const auto rx = average_ranks(x), ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// proposition

namespace {

long double log_sum_exp(const std::vector<long double>& logs) {
    const long double m = *std::max_element(logs.begin(), logs.end());
    long double s = 0.0L;
    for (long double l : logs) s += std::exp(l - m);
    return m + std::log(s);
}

// Exact-as-possible comparison: linear scale when it fits, log scale otherwise.
void finish(PropositionCheck& c, const std::vector<long double>& lhs_logs, long double rhs_log) {
    c.log_lhs = log_sum_exp(lhs_logs);
    c.log_rhs = rhs_log;
    c.lhs = std::exp(c.log_lhs);
    c.rhs = std::exp(c.log_rhs);
    if (std::isfinite(c.lhs) && std::isfinite(c.rhs) && c.rhs > 0.0L) {
        long double s = 0.0L;
        for (long double l : lhs_logs) s += std::exp(l);
        c.lhs = s;
        c.holds = s < c.rhs;
    } else {
        c.holds = c.log_lhs < c.log_rhs;
    }
}

bool common_preconditions(PropositionCheck& c, double p, const std::vector<int>& counts) {
    if (!(p > 1.0) || !std::isfinite(p)) {
        c.reason = "p must be > 1";
        return false;
    }
    if (counts.size() < 3) {
        c.reason = "needs k >= 3 sub-domains";
        return false;
    }
    for (int n : counts)
        if (n < 0 || std::pow(static_cast<long double>(p), n) < 2.0L) {
            c.reason = "every sub-domain needs p^N_i >= 2";
            return false;
        }
    return true;
}

}  // namespace

PropositionCheck verify_proposition(double p, const std::vector<int>& counts) {
    PropositionCheck c;
    if (!common_preconditions(c, p, counts)) return c;
    c.applicable = true;
    const long double lp = std::log(static_cast<long double>(p));
    std::vector<long double> logs;
    long double total = 0.0L;
    for (int n : counts) {
        logs.push_back(n * lp);
        total += n;
    }
    finish(c, logs, total * lp);
    return c;
}

PropositionCheck verify_proposition_smaller(double p, const std::vector<double>& head_p,
                                            const std::vector<int>& counts) {
    PropositionCheck c;
    if (head_p.size() != counts.size()) throw InputError("need one p_i per sub-domain");
    if (!common_preconditions(c, p, counts)) return c;
    for (double pi : head_p)
        if (!(pi > p) || !std::isfinite(pi)) {
            c.reason = "every p_i must exceed p";
            return c;
        }
    const long double k = static_cast<long double>(counts.size());
    const long double p_hat = *std::max_element(head_p.begin(), head_p.end());
    const int n_hat = *std::max_element(counts.begin(), counts.end());
    const long double pk = std::pow(2.0L, k - 1.0L);
    c.stated_condition = (static_cast<long double>(p) / p_hat) * pk > k;
    c.corrected_condition =
        n_hat * std::log(static_cast<long double>(p) / p_hat) + std::log(pk) > std::log(k);
    if (!c.stated_condition) {
        c.reason = "(p / p_hat) * 2^(k-1) <= k";
        return c;
    }
    c.applicable = true;
    std::vector<long double> logs;
    long double total = 0.0L;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        logs.push_back(counts[i] * std::log(static_cast<long double>(head_p[i])));
        total += counts[i];
    }
    finish(c, logs, total * std::log(static_cast<long double>(p)));
    return c;
}

// ---------------------------------------------------------------------------
// sweep

SweepConfig SweepConfig::preset(const std::string& name, int dim) {
    SweepConfig c;
    c.dim = dim;
    if (dim != 1 && dim != 2) throw ConfigError("dim must be 1 or 2");
    if (name == "desk") {
        c.ns = dim == 1 ? std::vector<int>{1, 5, 10, 20, 30, 40} : std::vector<int>{10, 20, 40, 60, 80};
        c.seeds = 3;
    } else if (name == "full") {
        c.ns.clear();
        if (dim == 1)
            for (int n = 1; n <= 70; ++n) c.ns.push_back(n);
        else
            for (int m = 10; m <= 250; m += 10) c.ns.push_back(m);
        c.seeds = 5;
    } else {
        throw ConfigError("unknown preset '" + name + "' (desk or full)");
    }
    return c;
}

HypothesisReport run_sweep(const SweepConfig& config) {
    if (config.ns.empty() || config.seeds < 1) throw ConfigError("sweep needs N values and seeds >= 1");
    struct Job {
        SignalSpec spec;
        std::size_t n_index;
    };
    std::vector<Job> jobs;
    HypothesisReport rep;
    for (std::size_t i = 0; i < config.ns.size(); ++i) {
        SignalSpec s;
        s.dim = config.dim;
        if (config.dim == 1) {
            s.n = config.ns[i];
        } else {
            std::tie(s.n1, s.n2) = close_factors(config.ns[i]);
        }
        rep.ns.push_back(s.total_boundaries());
        for (int k = 0; k < config.seeds; ++k) {
            s.seed = derive_seed(config.base_seed, static_cast<std::uint64_t>(k));
            jobs.push_back({s, i});
        }
    }
    rep.rows.resize(jobs.size());
    const ModelConfig model = signal_model(config.dim);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
            const auto& job = jobs[j];
            const SignalData data = gen_signal(job.spec);
            SweepRow row;
            row.dim = config.dim;
            row.n = job.spec.total_boundaries();
            row.seed = job.spec.seed;
            row.result = measure_convergence(data, model, config.convergence, derive_seed(job.spec.seed, 3));
            rep.rows[j] = row;
        }
    };
    int threads = config.threads > 0 ? config.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, static_cast<int>(jobs.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    std::vector<std::pair<double, double>> fit_points;
    std::vector<double> rho_n, rho_steps;
    for (std::size_t i = 0; i < rep.ns.size(); ++i) {
        std::vector<double> steps;
        int censored = 0;
        for (std::size_t j = 0; j < jobs.size(); ++j) {
            if (jobs[j].n_index != i) continue;
            if (rep.rows[j].result.censored)
                ++censored;
            else
                steps.push_back(rep.rows[j].result.steps);
        }
        rep.censored.push_back(censored);
        if (steps.empty()) {
            rep.mean_steps.push_back(std::numeric_limits<double>::quiet_NaN());
            rep.std_steps.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const double mean = std::accumulate(steps.begin(), steps.end(), 0.0) / static_cast<double>(steps.size());
        double var = 0.0;
        for (double s : steps) var += (s - mean) * (s - mean);
        rep.mean_steps.push_back(mean);
        rep.std_steps.push_back(std::sqrt(var / static_cast<double>(steps.size())));
        fit_points.emplace_back(rep.ns[i], mean);
        rho_n.push_back(rep.ns[i]);
        rho_steps.push_back(mean);
    }
    try {
        rep.fit = fit_exponent(fit_points);
        rep.fit_ok = true;
    } catch (const InputError&) {
        rep.fit_ok = false;
    }
    rep.spearman_rho = rho_n.size() >= 2 ? spearman(rho_n, rho_steps) : 0.0;
    return rep;
}

void write_sweep_csv(std::ostream& out, const HypothesisReport& report) {
    out << "dim,N,seed,steps,censored,diverged\n";
    for (const auto& r : report.rows)
        out << r.dim << ',' << r.n << ',' << r.seed << ',' << r.result.steps << ',' << (r.result.censored ? 1 : 0)
            << ',' << (r.result.diverged ? 1 : 0) << '\n';
}

std::string sweep_summary(const HypothesisReport& report) {
    std::ostringstream s;
    int censored = 0;
    for (int c : report.censored) censored += c;
    s << "p=" << (report.fit_ok ? report.fit.p : std::numeric_limits<double>::quiet_NaN())
      << " r2=" << (report.fit_ok ? report.fit.r2 : std::numeric_limits<double>::quiet_NaN())
      << " spearman=" << report.spearman_rho << " runs=" << report.rows.size() << " censored=" << censored;
    return s.str();
}

}  // namespace pinr
