#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "pinr/error.hpp"
#include "pinr/hypothesis.hpp"

using namespace pinr;

TEST_CASE("exponent fit recovers exact exponentials") {
    std::vector<std::pair<double, double>> pts;
    for (int n = 1; n <= 8; ++n) pts.emplace_back(n, std::pow(2.0, n));
    auto f = fit_exponent(pts);
    CHECK(f.p == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));

    pts.clear();
    for (int n = 1; n <= 5; ++n) pts.emplace_back(n, 37.0);
    f = fit_exponent(pts);
    CHECK(f.p == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(fit_exponent({{1, 2}, {2, 4}}), InputError);
    CHECK_THROWS_AS(fit_exponent({{1, 2}, {2, 0}, {3, 8}}), InputError);
}

TEST_CASE("spearman with ties") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
    // Ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4).
    const double r = spearman({1, 2, 2, 3}, {1, 2, 3, 4});
    CHECK(r == doctest::Approx(4.5 / std::sqrt(4.5 * 5.0)));
}

TEST_CASE("proposition on the worked example") {
    auto c = verify_proposition(1.0656, {20, 20, 20});
    REQUIRE(c.applicable);
    CHECK(c.holds);
    CHECK(static_cast<double>(c.lhs) == doctest::Approx(3.0 * std::pow(1.0656, 20)).epsilon(1e-12));
    CHECK(static_cast<double>(c.lhs) == doctest::Approx(10.68).epsilon(1e-3));
    CHECK(static_cast<double>(c.rhs) == doctest::Approx(45.3).epsilon(2e-3));

    CHECK_FALSE(verify_proposition(1.0656, {20, 20}).applicable);
    CHECK_FALSE(verify_proposition(1.0656, {20, 20, 5}).applicable);  // 1.0656^5 < 2
    CHECK_FALSE(verify_proposition(1.0, {5, 5, 5}).applicable);
}

TEST_CASE("proposition holds on random admissible instances") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> up(1.01, 3.0);
    std::uniform_int_distribution<int> uk(3, 12);
    int checked = 0;
    while (checked < 1000) {
        const double p = up(rng);
        const int k = uk(rng);
        const int n_min = static_cast<int>(std::ceil(std::log(2.0) / std::log(p)));
        std::uniform_int_distribution<int> un(n_min, n_min + 400);
        std::vector<int> counts(k);
        for (int& n : counts) n = un(rng);
        auto c = verify_proposition(p, counts);
        REQUIRE(c.applicable);
        CHECK(c.holds);
        ++checked;
    }
}

TEST_CASE("log-domain comparison for huge exponents") {
    auto c = verify_proposition(2.0, {20000, 20000, 20000});
    REQUIRE(c.applicable);
    CHECK(c.holds);
    CHECK(c.log_rhs - c.log_lhs == doctest::Approx(40000 * std::log(2.0) - std::log(3.0)));
}

TEST_CASE("smaller-per-head variant: stated condition is not sufficient") {
    auto c = verify_proposition_smaller(1.1, {1.2, 1.2, 1.2, 1.2, 1.2}, {100, 8, 8, 8, 8});
    CHECK(c.stated_condition);
    CHECK(c.applicable);
    CHECK_FALSE(c.holds);
    CHECK_FALSE(c.corrected_condition);

    // Whenever the corrected condition holds the inequality follows.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> up(1.05, 2.0), ur(1.0001, 1.05);
    std::uniform_int_distribution<int> uk(3, 10);
    int hits = 0;
    for (int t = 0; t < 2000; ++t) {
        const double p = up(rng);
        const int k = uk(rng);
        const int n_min = static_cast<int>(std::ceil(std::log(2.0) / std::log(p)));
        std::uniform_int_distribution<int> un(n_min, n_min + 60);
        std::vector<int> counts(k);
        std::vector<double> heads(k);
        for (int i = 0; i < k; ++i) {
            counts[i] = un(rng);
            heads[i] = p * ur(rng);
        }
        auto r = verify_proposition_smaller(p, heads, counts);
        if (r.applicable && r.corrected_condition) {
            CHECK(r.holds);
            ++hits;
        }
    }
    CHECK(hits > 100);
}

TEST_CASE("signal generation") {
    SignalSpec s;
    s.n = 12;
    s.seed = 3;
    s.train_points = 400;
    s.test_points = 1000;
    auto d = gen_signal(s);
    CHECK(d.bx.size() == 12u);
    CHECK(count_sign_changes(d.test_y) == 12);
    CHECK(d.test_y(0, 0) == 1.0);
    for (Eigen::Index i = 0; i < d.train_x.rows(); ++i) {
        int below = 0;
        for (double b : d.bx) below += b < d.train_x(i, 0);
        CHECK(d.train_y(i, 0) == (below % 2 == 0 ? 1.0 : -1.0));
    }
    CHECK(gen_signal(s).train_x == d.train_x);

    SignalSpec q;
    q.dim = 2;
    q.n1 = 2;
    q.n2 = 3;
    q.grid = 64;
    q.seed = 1;
    CHECK(q.total_boundaries() == 17);
    auto g = gen_signal(q);
    CHECK(g.train_x.rows() == 64 * 64);
    CHECK(g.train_y(0, 0) == 1.0);
    // Every row and column flips exactly as many times as there are lines.
    Matrix row(64, 1), col(64, 1);
    for (int i = 0; i < 64; ++i) {
        row(i, 0) = g.train_y(10 * 64 + i, 0);
        col(i, 0) = g.train_y(i * 64 + 10, 0);
    }
    CHECK(count_sign_changes(row) == 2);
    CHECK(count_sign_changes(col) == 3);

    CHECK(close_factors(12) == std::pair{3, 4});
    CHECK(close_factors(13) == std::pair{1, 13});
    CHECK(close_factors(250) == std::pair{10, 25});
    SignalSpec bad;
    bad.n = 5000;
    CHECK_THROWS_AS(gen_signal(bad), ConfigError);
}

TEST_CASE("convergence measurement") {
    SignalSpec s;
    s.n = 0;
    s.train_points = 300;
    s.test_points = 300;
    auto d = gen_signal(s);
    ConvergenceOptions o;
    auto r = measure_convergence(d, signal_model(1), o, 7);
    CHECK_FALSE(r.censored);
    CHECK(r.steps <= 50);
    CHECK(measure_convergence(d, signal_model(1), o, 7).steps == r.steps);

    o.cap = 1;
    s.n = 10;
    auto r1 = measure_convergence(gen_signal(s), signal_model(1), o, 7);
    CHECK(r1.censored);
    CHECK(r1.steps == 1);

    o.cap = 20;
    o.lr = 1e300;
    auto r2 = measure_convergence(gen_signal(s), signal_model(1), o, 7);
    CHECK(r2.censored);
}

TEST_CASE("sweep bookkeeping") {
    SweepConfig c = SweepConfig::preset("desk", 1);
    CHECK(c.ns == std::vector<int>{1, 5, 10, 20, 30, 40});
    CHECK(SweepConfig::preset("full", 1).ns.size() == 70u);
    CHECK_THROWS_AS(SweepConfig::preset("huge", 1), ConfigError);
    c.ns = {0, 1, 2};
    c.seeds = 2;
    c.convergence.cap = 400;
    auto rep = run_sweep(c);
    CHECK(rep.rows.size() == 6u);
    CHECK(rep.ns == std::vector<int>{0, 1, 2});
    std::ostringstream out;
    write_sweep_csv(out, rep);
    const std::string csv = out.str();
    CHECK(csv.rfind("dim,N,seed,steps,censored,diverged\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}
