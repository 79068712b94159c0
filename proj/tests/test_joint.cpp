#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "hll/classic.hpp"
#include "hll/errors.hpp"
#include "hll/improved.hpp"
#include "hll/joint.hpp"
#include "hll/ml.hpp"
#include "hll/sim.hpp"
#include "support.hpp"

using namespace hll;

namespace {

std::uint64_t sum(const std::vector<std::uint64_t>& v) { return std::accumulate(v.begin(), v.end(), std::uint64_t{0}); }

std::pair<Sketch, Sketch> pair(std::uint64_t a, std::uint64_t b, std::uint64_t x, const SketchConfig& c,
                               std::uint64_t stream) {
    auto engine = sim::make_engine({77, stream});
    return sim::sample_joint_pair(a, b, x, c, engine);
}

JointEstimate from_log(const std::array<double, 3>& phi) {
    return {std::exp(phi[0]), std::exp(phi[1]), std::exp(phi[2])};
}

// Fourth-order central difference of the log-likelihood in log-rate space.
double numeric_partial(const JointStatistic& stat, std::array<double, 3> phi, std::size_t i, double h) {
    auto at = [&](double shift) {
        auto p = phi;
        p[i] += shift;
        return joint_log_likelihood(from_log(p), stat);
    };
    return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
}

}  // namespace

TEST_CASE("statistic of identical sketches") {
    const SketchConfig c(10, 16);
    std::mt19937_64 rng(1);
    const auto s = test::random_sketch(c, 3000, rng);
    const auto stat = joint_statistic(s, s);
    CHECK(stat.c_equal == histogram(s).counts);
    CHECK(sum(stat.c1_less) == 0);
    CHECK(sum(stat.c1_greater) == 0);
    CHECK(sum(stat.c2_less) == 0);
    CHECK(sum(stat.c2_greater) == 0);
}

TEST_CASE("statistic of a fresh sketch against all-ones") {
    const SketchConfig c(6, 8);
    const Sketch fresh(c);
    const auto ones = Sketch::from_registers(c, std::vector<std::uint8_t>(64, 1));
    const auto stat = joint_statistic(fresh, ones);
    CHECK(stat.c1_less[0] == 64);
    CHECK(stat.c2_greater[1] == 64);
    CHECK(sum(stat.c1_less) + sum(stat.c2_greater) == 128);
    CHECK(sum(stat.c1_greater) + sum(stat.c2_less) + sum(stat.c_equal) == 0);
}

TEST_CASE("statistic totals and marginals") {
    const SketchConfig c(8, 12);
    std::mt19937_64 rng(2);
    for (int t = 0; t < 50; ++t) {
        const auto s1 = test::random_sketch(c, rng() % 3000, rng);
        const auto s2 = test::random_sketch(c, rng() % 3000, rng);
        const auto stat = joint_statistic(s1, s2);
        CHECK(sum(stat.c1_less) + sum(stat.c_equal) + sum(stat.c1_greater) == c.m());
        CHECK(sum(stat.c2_less) + sum(stat.c_equal) + sum(stat.c2_greater) == c.m());
        CHECK(sum(stat.c1_less) == sum(stat.c2_greater));
        CHECK(sum(stat.c2_less) == sum(stat.c1_greater));
        CHECK(sum(stat.c1_less) + sum(stat.c1_greater) + sum(stat.c2_less) + sum(stat.c2_greater) +
                  sum(stat.c_equal) ==
              2 * c.m() - sum(stat.c_equal));
        CHECK(stat.histogram1() == histogram(s1));
        CHECK(stat.histogram2() == histogram(s2));
        CHECK(stat.union_histogram() == histogram(merge(s1, s2)));
        CHECK(stat.swapped() == joint_statistic(s2, s1));
    }
}

TEST_CASE("statistic rejects different parameters") {
    CHECK_THROWS_AS(joint_statistic(Sketch(SketchConfig(8, 12)), Sketch(SketchConfig(8, 13))), ConfigMismatch);
}

TEST_CASE("inclusion-exclusion arithmetic") {
    const SketchConfig c(10, 16);
    for (std::uint64_t t = 0; t < 20; ++t) {
        const auto [s1, s2] = pair(1000, 300, 50, c, t);
        const double n1 = improved_estimate(histogram(s1), c);
        const double n2 = improved_estimate(histogram(s2), c);
        const double nu = improved_estimate(histogram(merge(s1, s2)), c);
        const auto r = inclusion_exclusion_estimate(s1, s2);
        CHECK(r.estimate.lambda_a == nu - n2);
        CHECK(r.estimate.lambda_b == nu - n1);
        CHECK(r.estimate.lambda_x == n1 + n2 - nu);
        CHECK(r.has_negative == (r.estimate.lambda_a < 0 || r.estimate.lambda_b < 0 || r.estimate.lambda_x < 0));

        const auto raw = inclusion_exclusion_estimate(s1, s2, Estimator::raw).estimate;
        CHECK(raw.lambda_x == raw_estimate(histogram(s1), c) + raw_estimate(histogram(s2), c) -
                                  raw_estimate(histogram(merge(s1, s2)), c));
    }
}

TEST_CASE("inclusion-exclusion of identical sketches") {
    const SketchConfig c(12, 20);
    const auto s = sim::sample_sketch(5000, c, sim::RngSeed{1, 0});
    const auto r = inclusion_exclusion_estimate(s, s);
    CHECK(r.estimate.lambda_a == 0.0);
    CHECK(r.estimate.lambda_b == 0.0);
    CHECK(r.estimate.lambda_x == improved_estimate(histogram(s), c));
    CHECK_FALSE(r.has_negative);
}

TEST_CASE("inclusion-exclusion can go negative") {
    const SketchConfig c(10, 16);
    int negatives = 0;
    for (std::uint64_t t = 0; t < 200; ++t) {
        const auto [s1, s2] = pair(5000, 5000, 0, c, 100 + t);
        negatives += inclusion_exclusion_estimate(s1, s2).has_negative ? 1 : 0;
    }
    CHECK(negatives > 20);
}

TEST_CASE("log-likelihood domain") {
    const SketchConfig c(8, 12);
    const auto [s1, s2] = pair(100, 100, 100, c, 0);
    const auto stat = joint_statistic(s1, s2);
    CHECK_THROWS_AS(joint_log_likelihood({0.0, 1.0, 1.0}, stat), DomainError);
    CHECK_THROWS_AS(joint_log_likelihood({1.0, -1.0, 1.0}, stat), DomainError);
    CHECK_THROWS_AS(joint_gradient({1.0, 1.0, INFINITY}, stat), DomainError);
}

TEST_CASE("log-likelihood role symmetry") {
    const SketchConfig c(8, 12);
    for (std::uint64_t t = 0; t < 20; ++t) {
        const auto [s1, s2] = pair(300, 1000, 500, c, t);
        const auto stat = joint_statistic(s1, s2);
        const JointEstimate e{250.0, 1300.0, 400.0};
        const JointEstimate swapped{e.lambda_b, e.lambda_a, e.lambda_x};
        CHECK(joint_log_likelihood(e, stat) ==
              doctest::Approx(joint_log_likelihood(swapped, stat.swapped())).epsilon(1e-14));
        const auto g = joint_gradient(e, stat);
        const auto gs = joint_gradient(swapped, stat.swapped());
        CHECK(g[0] == doctest::Approx(gs[1]).epsilon(1e-13));
        CHECK(g[1] == doctest::Approx(gs[0]).epsilon(1e-13));
        CHECK(g[2] == doctest::Approx(gs[2]).epsilon(1e-13));
    }
}

TEST_CASE("log-likelihood with a fresh second sketch reduces to the single-sketch one") {
    const SketchConfig c(10, 16);
    const auto s1 = sim::sample_sketch(4000, c, sim::RngSeed{2, 0});
    const auto stat = joint_statistic(s1, Sketch(c));
    for (double a : {1000.0, 4000.0, 9000.0}) {
        const double tiny = 1e-9;
        CHECK(joint_log_likelihood({a, tiny, tiny}, stat) ==
              doctest::Approx(log_likelihood(a, histogram(s1), c)).epsilon(1e-9));
    }
}

TEST_CASE("gradient matches finite differences") {
    const SketchConfig c(8, 16);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> shift(-1.5, 1.5);
    for (std::uint64_t t = 0; t < 10; ++t) {
        const auto [s1, s2] = pair(rng() % 5000, rng() % 5000, rng() % 5000, c, 200 + t);
        const auto stat = joint_statistic(s1, s2);
        for (int k = 0; k < 20; ++k) {
            const std::array<double, 3> phi{std::log(500.0) + 2 * shift(rng), std::log(500.0) + 2 * shift(rng),
                                            std::log(500.0) + 2 * shift(rng)};
            const auto g = joint_gradient(from_log(phi), stat);
            for (std::size_t i = 0; i < 3; ++i) {
                CHECK(g[i] == doctest::Approx(numeric_partial(stat, phi, i, 1e-3)).epsilon(1e-6).scale(1e-3));
            }
        }
    }
}

TEST_CASE("adding disjoint mass to identical sketches is disfavoured") {
    const SketchConfig c(12, 20);
    const auto s = sim::sample_sketch(10000, c, sim::RngSeed{4, 0});
    const auto stat = joint_statistic(s, s);
    for (double a : {1.0, 10.0, 100.0}) {
        const auto g = joint_gradient({a, a, 1e6}, stat);
        CHECK(g[0] < 0.0);
        CHECK(g[1] < 0.0);
    }
}

TEST_CASE("degenerate pairs") {
    const SketchConfig c(10, 16);
    const Sketch fresh(c);
    const auto saturated = Sketch::from_registers(c, std::vector<std::uint8_t>(1024, 17));
    const auto s = sim::sample_sketch(3000, c, sim::RngSeed{5, 0});
    const double single = ml_estimate(histogram(s), c);

    auto e = joint_ml_estimate(fresh, fresh);
    CHECK(e.lambda_a == 0.0);
    CHECK(e.lambda_b == 0.0);
    CHECK(e.lambda_x == 0.0);

    e = joint_ml_estimate(fresh, s);
    CHECK(e.lambda_a == 0.0);
    CHECK(e.lambda_b == single);
    CHECK(e.lambda_x == 0.0);

    e = joint_ml_estimate(s, fresh);
    CHECK(e.lambda_a == single);
    CHECK(e.lambda_b == 0.0);
    CHECK(e.lambda_x == 0.0);

    e = joint_ml_estimate(saturated, saturated);
    CHECK(e.lambda_a == 0.0);
    CHECK(e.lambda_b == 0.0);
    CHECK(std::isinf(e.lambda_x));

    e = joint_ml_estimate(saturated, s);
    CHECK(std::isinf(e.lambda_a));
    CHECK(e.lambda_b == 0.0);
    CHECK(e.lambda_x == single);

    e = joint_ml_estimate(s, saturated);
    CHECK(e.lambda_a == 0.0);
    CHECK(std::isinf(e.lambda_b));
    CHECK(e.lambda_x == single);
}

TEST_CASE("identical sketches give an intersection-only estimate") {
    const SketchConfig c(12, 20);
    double sum_x = 0.0;
    const int trials = 300;
    for (std::uint64_t t = 0; t < trials; ++t) {
        const auto s = sim::sample_sketch(10000, c, sim::RngSeed{6, t});
        const auto e = joint_ml_estimate(s, s);
        CHECK(e.lambda_a < 0.02 * e.lambda_x);
        CHECK(e.lambda_b < 0.02 * e.lambda_x);
        sum_x += e.lambda_x;
    }
    CHECK(sum_x / trials == doctest::Approx(10000).epsilon(0.03));
}

TEST_CASE("joint ML optimum") {
    const SketchConfig c(10, 16);
    const double delta = JointSolverConfig{}.delta(c);
    const std::array<std::array<std::uint64_t, 3>, 5> configs{{{2000, 2000, 2000},
                                                               {5000, 5000, 50},
                                                               {50, 50, 5000},
                                                               {20000, 500, 500},
                                                               {100, 3000, 0}}};
    std::uint64_t stream = 300;
    for (const auto& [a, b, x] : configs) {
        for (int t = 0; t < 10; ++t) {
            const auto [s1, s2] = pair(a, b, x, c, stream++);
            const auto stat = joint_statistic(s1, s2);
            const auto solution = joint_ml_solve(stat);
            const auto& e = solution.estimate;
            CHECK(e.lambda_a >= 0.0);
            CHECK(e.lambda_b >= 0.0);
            CHECK(e.lambda_x >= 0.0);
            CHECK(solution.iterations <= 500);

            // never worse than the starting point
            auto positive = [](JointEstimate v) {
                return JointEstimate{std::max(v.lambda_a, 1e-300), std::max(v.lambda_b, 1e-300),
                                     std::max(v.lambda_x, 1e-300)};
            };
            const double at_optimum = joint_log_likelihood(positive(e), stat);
            CHECK(at_optimum >= joint_log_likelihood(solution.initial, stat) - 1e-9 * std::fabs(at_optimum));

            // remaining Newton step of every free component is within the stopping tolerance
            const std::array<double, 3> rates{e.lambda_a, e.lambda_b, e.lambda_x};
            const auto g = joint_gradient(positive(e), stat);
            for (std::size_t i = 0; i < 3; ++i) {
                if (solution.zeroed[i]) {
                    CHECK(rates[i] == 0.0);
                    continue;
                }
                if (rates[i] < 1.0) continue;
                const auto p = positive(e);
                std::array<double, 3> phi{std::log(p.lambda_a), std::log(p.lambda_b), std::log(p.lambda_x)};
                const double h = 1e-3;
                phi[i] += h;
                const double up = joint_gradient(from_log(phi), stat)[i];
                phi[i] -= 2 * h;
                const double down = joint_gradient(from_log(phi), stat)[i];
                const double curvature = (up - down) / (2 * h);
                REQUIRE(curvature < 0.0);
                CAPTURE(i);
                CHECK(std::fabs(g[i] / curvature) <= 10 * delta);
            }
        }
    }
}

TEST_CASE("joint ML role symmetry") {
    const SketchConfig c(10, 16);
    for (std::uint64_t t = 0; t < 30; ++t) {
        const auto [s1, s2] = pair(3000, 800, 1500, c, 400 + t);
        const auto e12 = joint_ml_estimate(s1, s2);
        const auto e21 = joint_ml_estimate(s2, s1);
        CHECK(e12.lambda_a == doctest::Approx(e21.lambda_b).epsilon(0.01));
        CHECK(e12.lambda_b == doctest::Approx(e21.lambda_a).epsilon(0.01));
        CHECK(e12.lambda_x == doctest::Approx(e21.lambda_x).epsilon(0.01));
    }
}

TEST_CASE("joint ML union tracks the merged-sketch estimate") {
    const SketchConfig c(10, 16);
    const int trials = 200;
    double sum_diff = 0.0;
    double sum_sq = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        const auto [s1, s2] = pair(4000, 2000, 1000, c, 500 + t);
        const double joint = joint_ml_estimate(s1, s2).union_size();
        const double merged = improved_estimate(histogram(merge(s1, s2)), c);
        const double d = joint / 7000.0 - merged / 7000.0;
        sum_diff += d;
        sum_sq += d * d;
    }
    const double mean = sum_diff / trials;
    const double sd = std::sqrt((sum_sq - trials * mean * mean) / (trials - 1));
    CHECK(std::fabs(mean) <= 3 * sd / std::sqrt(trials) + 1e-4);
}

TEST_CASE("equal-register probability bounds") {
    auto b = equal_register_probability_bounds(0.0);
    CHECK(b.lower == 1.0);
    CHECK(b.upper == 1.0);
    b = equal_register_probability_bounds(1.0);
    CHECK(std::fabs(b.lower) < 1e-15);
    CHECK(b.upper == doctest::Approx(1.0 + 2.0 * alpha_inf * std::log(9.0 / 16.0)).epsilon(1e-15));
    for (int i = 0; i <= 100; ++i) {
        const double d = i / 100.0;
        b = equal_register_probability_bounds(d);
        CHECK(b.lower <= b.upper);
        CHECK(b.lower >= -1e-15);
        CHECK(b.upper <= 1.0);
    }
    CHECK_THROWS_AS(equal_register_probability_bounds(-0.1), DomainError);
    CHECK_THROWS_AS(equal_register_probability_bounds(1.1), DomainError);
}
