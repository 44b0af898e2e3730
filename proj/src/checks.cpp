#include "pinr/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <random>
#include <sstream>

#include "pinr/autodiff.hpp"
#include "pinr/hypothesis.hpp"
#include "pinr/models.hpp"
#include "pinr/partition.hpp"
#include "pinr/rng.hpp"
#include "pinr/spectra.hpp"

namespace pinr {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = u(rng);
    return m;
}

}  // namespace

GradSuite run_grad_suite(int nets_per_arch, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    GradSuite s;
    s.nets_per_arch = nets_per_arch;
    std::size_t kinks = 0, total = 0;
    for (int i = 0; i < nets_per_arch; ++i) {
        std::mt19937_64 rng(derive_seed(seed, std::uint64_t(i)));
        const Matrix x = uniform_matrix(16, 2, rng);
        const Matrix y = uniform_matrix(16, 1, rng);

        ModelConfig sine;
        sine.hidden_features = 16;
        sine.hidden_layers = 3;
        sine.omega_first = sine.omega_hidden = 1.0;
        s.sine_max_rel = std::max(s.sine_max_rel, grad_check(build(sine, rng()), sine, x, y).max_rel_error);

        sine.omega_first = sine.omega_hidden = 30.0;
        s.sine30_max_scaled =
            std::max(s.sine30_max_scaled, grad_check(build(sine, rng()), sine, x, y).max_scaled_error);

        ModelConfig relu;
        relu.arch = Arch::ReluPe;
        relu.hidden_features = 16;
        relu.hidden_layers = 3;
        relu.n_harmonics = 4;
        const ParamSet net = build(relu, rng());
        const auto r = grad_check(net, relu, x, y);
        s.relu_max_rel = std::max(s.relu_max_rel, r.max_rel_error);
        kinks += r.kinks_skipped;
        total += net.size();
    }
    s.relu_kink_fraction = total ? double(kinks) / double(total) : 0.0;
    s.seconds = seconds_since(t0);
    return s;
}

PropositionSuite run_proposition_suite(int instances, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    PropositionSuite s;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> up(1.01, 3.0);
    std::uniform_int_distribution<int> uk(3, 12);
    auto draw_counts = [&](double p, int k, int spread) {
        const int n_min = static_cast<int>(std::ceil(std::log(2.0) / std::log(p)));
        std::uniform_int_distribution<int> un(n_min, n_min + spread);
        std::vector<int> counts(static_cast<std::size_t>(k));
        for (int& n : counts) n = un(rng);
        return counts;
    };
    while (s.instances < instances) {
        const double p = up(rng);
        const auto counts = draw_counts(p, uk(rng), 200);
        const auto c = verify_proposition(p, counts);
        if (!c.applicable) continue;
        ++s.instances;
        if (!c.holds) ++s.theorem_failures;
    }
    // Per-head variant: p_i drawn in (p, 1.5 p), instances kept when the
    // stated condition holds.
    std::uniform_real_distribution<double> ratio(1.0001, 1.5);
    int attempts = 0;
    while (s.variant_instances < instances && attempts < 1000 * instances) {
        ++attempts;
        const double p = up(rng);
        const int k = uk(rng);
        const auto counts = draw_counts(p, k, 200);
        std::vector<double> heads(static_cast<std::size_t>(k));
        for (double& h : heads) h = p * ratio(rng);
        const auto c = verify_proposition_smaller(p, heads, counts);
        if (!c.applicable) continue;
        ++s.variant_instances;
        if (!c.holds) {
            ++s.variant_failures;
            if (s.first_counterexample.empty()) {
                std::ostringstream o;
                o.precision(6);
                o << "p=" << p << " k=" << k << " max p_i=" << *std::max_element(heads.begin(), heads.end())
                  << " N=(";
                for (std::size_t i = 0; i < counts.size(); ++i) o << (i ? "," : "") << counts[i];
                o << ") log lhs=" << double(c.log_lhs) << " log rhs=" << double(c.log_rhs);
                s.first_counterexample = o.str();
            }
        }
    }
    // Corrected condition (p / p_hat)^N_hat * 2^(k-1) > k: p_i drawn closer to p.
    std::uniform_real_distribution<double> log_gap(-5.0, -1.0);
    attempts = 0;
    while (s.corrected_instances < instances && attempts < 1000 * instances) {
        ++attempts;
        const double p = up(rng);
        const int k = uk(rng);
        const auto counts = draw_counts(p, k, 200);
        std::vector<double> heads(static_cast<std::size_t>(k));
        for (double& h : heads) h = p * (1.0 + std::pow(10.0, log_gap(rng)));
        const auto c = verify_proposition_smaller(p, heads, counts);
        if (!c.applicable || !c.corrected_condition) continue;
        ++s.corrected_instances;
        if (!c.holds) ++s.corrected_failures;
    }
    s.seconds = seconds_since(t0);
    return s;
}

namespace {

// Independent BFS: label count, coverage and per-label connectivity.
std::string mask_problem(const LabelMap& m, int k) {
    const int h = m.height, w = m.width;
    std::vector<int> first(static_cast<std::size_t>(k), -1), area(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < h * w; ++i) {
        const int l = m.labels[std::size_t(i)];
        if (l < 0 || l >= k) return "label out of range";
        if (first[std::size_t(l)] < 0) first[std::size_t(l)] = i;
        ++area[std::size_t(l)];
    }
    std::vector<char> seen(std::size_t(h * w), 0);
    for (int l = 0; l < k; ++l) {
        if (first[std::size_t(l)] < 0) return "label " + std::to_string(l) + " unused";
        int reached = 0;
        std::queue<int> q;
        q.push(first[std::size_t(l)]);
        seen[std::size_t(first[std::size_t(l)])] = 1;
        while (!q.empty()) {
            const int i = q.front();
            q.pop();
            ++reached;
            const int y = i / w, x = i % w;
            const int nb[4][2] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}};
            for (const auto& n : nb) {
                if (n[0] < 0 || n[0] >= h || n[1] < 0 || n[1] >= w) continue;
                const int j = n[0] * w + n[1];
                if (!seen[std::size_t(j)] && m.labels[std::size_t(j)] == l) {
                    seen[std::size_t(j)] = 1;
                    q.push(j);
                }
            }
        }
        if (reached != area[std::size_t(l)]) return "label " + std::to_string(l) + " not 4-connected";
    }
    return {};
}

std::string grid_problem(int h, int w, GridSpec r) {
    const PartitionMask m = pog(h, w, r);
    const int cols = (w + r.rx - 1) / r.rx, rows = (h + r.ry - 1) / r.ry;
    if (m.k != cols * rows) return "k mismatch";
    const auto areas = m.areas();
    for (int cy = 0; cy < rows; ++cy)
        for (int cx = 0; cx < cols; ++cx) {
            const std::int64_t expect = std::int64_t(std::min(r.rx, w - cx * r.rx)) * std::min(r.ry, h - cy * r.ry);
            if (areas[std::size_t(cy * cols + cx)] != expect) return "cell area mismatch";
        }
    return mask_problem(m.map, m.k);
}

}  // namespace

PartitionSuite run_partition_suite(const std::vector<ImageField>& images, const std::vector<int>& ks,
                                   std::uint64_t seed) {
    PartitionSuite s;
    auto record = [&](const std::string& what, const std::string& problem) {
        ++s.masks_checked;
        if (!problem.empty()) {
            ++s.failures;
            s.log.push_back(what + ": " + problem);
        }
    };
    for (std::size_t i = 0; i < images.size(); ++i) {
        const ImageField& img = images[i];
        for (int k : ks) {
            const std::string tag = "image " + std::to_string(i) + " k=" + std::to_string(k);
            try {
                const PartitionMask m = pos(img, k);
                record("pos " + tag, m.k == k ? mask_problem(m.map, k) : "wrong k");
            } catch (const std::exception& e) {
                record("pos " + tag, e.what());
            }
            const auto [rows, cols] = near_square_cells(k);
            record("pog " + tag, grid_problem(img.height, img.width, grid_for_cells(img.height, img.width, rows, cols)));
        }
    }
    std::mt19937_64 rng(seed);
    for (int t = 0; t < 200; ++t) {
        std::uniform_int_distribution<int> dim(1, 64);
        const int h = dim(rng), w = dim(rng);
        std::uniform_int_distribution<int> sx(1, w), sy(1, h);
        record("random grid", grid_problem(h, w, {sx(rng), sy(rng)}));
    }
    return s;
}

ParsevalSuite run_parseval_suite(int images, std::uint64_t seed) {
    ParsevalSuite s;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dim(1, 96);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < images; ++i) {
        ImageField img(dim(rng), dim(rng), i % 2 ? 3 : 1);
        for (double& v : img.values) v = u(rng);
        const auto [spatial, freq] = parseval_sides(img);
        s.max_rel_error = std::max(s.max_rel_error, std::abs(spatial - freq) / spatial);
        ++s.images;
    }
    return s;
}

}  // namespace pinr
