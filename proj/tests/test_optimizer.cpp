#include <doctest.h>

#include <cmath>

#include "hll/optimizer.hpp"

using namespace hll::optim;

namespace {

double rosenbrock(std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
}

}  // namespace

TEST_CASE("minimizes an ill-conditioned quadratic") {
    auto f = [](std::span<const double> x, std::span<double> g) {
        g[0] = 2.0 * (x[0] - 3.0);
        g[1] = 2000.0 * (x[1] + 1.0);
        g[2] = 0.02 * x[2];
        return (x[0] - 3.0) * (x[0] - 3.0) + 1000.0 * (x[1] + 1.0) * (x[1] + 1.0) + 0.01 * x[2] * x[2];
    };
    const auto r = minimize(f, {0.0, 0.0, 5.0}, 1e-9, 200);
    REQUIRE(r.converged);
    CHECK(r.x[0] == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(r.x[1] == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(std::fabs(r.x[2]) < 1e-6);
}

TEST_CASE("minimizes the Rosenbrock function") {
    const auto r = minimize(rosenbrock, {-1.2, 1.0}, 1e-8, 500);
    REQUIRE(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("steps never increase the objective") {
    BfgsMinimizer m(rosenbrock, {-1.2, 1.0});
    double previous = m.value();
    for (int i = 0; i < 100; ++i) {
        if (m.step() == StepStatus::failed) break;
        CHECK(m.value() <= previous);
        previous = m.value();
    }
}

TEST_CASE("frozen coordinates stay put") {
    auto f = [](std::span<const double> x, std::span<double> g) {
        g[0] = 2.0 * (x[0] - 1.0) + x[1];
        g[1] = 2.0 * (x[1] - 2.0) + x[0];
        return (x[0] - 1.0) * (x[0] - 1.0) + (x[1] - 2.0) * (x[1] - 2.0) + x[0] * x[1];
    };
    BfgsMinimizer m(f, {0.0, 5.0});
    m.freeze(1);
    CHECK(m.is_frozen(1));
    CHECK_FALSE(m.is_frozen(0));
    for (int i = 0; i < 50 && std::fabs(m.gradient()[0]) > 1e-10; ++i) m.step();
    CHECK(m.x()[1] == 5.0);
    // minimum over x0 with x1 = 5: 2 (x0 - 1) + 5 = 0
    CHECK(m.x()[0] == doctest::Approx(-1.5).epsilon(1e-8));
    CHECK(m.gradient()[1] == 0.0);
}

TEST_CASE("infeasible regions are avoided by backtracking") {
    // -log barrier: undefined for x <= 0
    auto f = [](std::span<const double> x, std::span<double> g) {
        g[0] = 1.0 - 1.0 / x[0];
        return x[0] - std::log(x[0]);
    };
    BfgsOptions options;
    options.max_step = 100.0;
    const auto r = minimize(f, {0.01}, 1e-10, 100, options);
    REQUIRE(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("a flat objective reports a failed step") {
    auto f = [](std::span<const double>, std::span<double> g) {
        g[0] = 0.0;
        return 1.0;
    };
    BfgsMinimizer m(f, {0.0});
    CHECK(m.step() == StepStatus::failed);
    CHECK(m.x()[0] == 0.0);
}
