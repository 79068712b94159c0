#include "hll/ml.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hll/detail/numerics.hpp"
#include "hll/errors.hpp"

namespace hll {

namespace {

// 1 / (m 2^min(k, q))
double rate_scale(const SketchConfig& config, int k) {
    return std::ldexp(1.0 / config.m(), -std::min(k, config.q()));
}

// sum_{k=0}^{q} C_k 2^-k
double linear_coefficient(const RegisterHistogram& h, const SketchConfig& config) {
    double z = 0.0;
    for (int k = config.q(); k >= 1; --k) {
        z = 0.5 * (z + static_cast<double>(h[static_cast<std::size_t>(k)]));
    }
    return z + static_cast<double>(h[0]);
}

// d/du of u / (e^u - 1).
double x_div_expm1_derivative(double u) {
    if (std::fabs(u) < 1e-4) return -0.5 + u / 6.0;
    const double g = u / std::expm1(u);
    return g * (1.0 / u + 1.0 / std::expm1(-u));
}

void require_positive(double lambda) {
    if (!(lambda > 0.0)) {
        throw DomainError("log-likelihood requires lambda > 0, got " + std::to_string(lambda));
    }
}

}  // namespace

double SolverConfig::delta(const SketchConfig& config) const {
    return epsilon / std::sqrt(static_cast<double>(config.m()));
}

double log_likelihood(double lambda, const RegisterHistogram& h, const SketchConfig& config) {
    require_positive(lambda);
    double sum = 0.0;
    for (int k = 1; k <= config.max_value(); ++k) {
        const auto c = h[static_cast<std::size_t>(k)];
        if (c == 0) continue;
        sum += static_cast<double>(c) * detail::log1m_exp_neg(lambda * rate_scale(config, k));
    }
    return sum - lambda / config.m() * linear_coefficient(h, config);
}

double log_likelihood_derivative(double lambda, const RegisterHistogram& h, const SketchConfig& config) {
    require_positive(lambda);
    double sum = 0.0;
    for (int k = 1; k <= config.max_value(); ++k) {
        const auto c = h[static_cast<std::size_t>(k)];
        if (c == 0) continue;
        const double s = rate_scale(config, k);
        sum += static_cast<double>(c) * s / std::expm1(lambda * s);
    }
    return sum - linear_coefficient(h, config) / config.m();
}

double ml_root_function(double lambda, const RegisterHistogram& h, const SketchConfig& config) {
    if (lambda == 0.0) return static_cast<double>(config.m() - h[0]);
    double sum = 0.0;
    for (int k = 1; k <= config.max_value(); ++k) {
        const auto c = h[static_cast<std::size_t>(k)];
        if (c == 0) continue;
        sum += static_cast<double>(c) * detail::x_div_expm1(lambda * rate_scale(config, k));
    }
    return sum - lambda / config.m() * linear_coefficient(h, config);
}

double ml_root_function_derivative(double lambda, const RegisterHistogram& h, const SketchConfig& config) {
    double sum = 0.0;
    for (int k = 1; k <= config.max_value(); ++k) {
        const auto c = h[static_cast<std::size_t>(k)];
        if (c == 0) continue;
        const double s = rate_scale(config, k);
        sum += static_cast<double>(c) * s * x_div_expm1_derivative(lambda * s);
    }
    return sum - linear_coefficient(h, config) / config.m();
}

Bracket ml_bracket(const RegisterHistogram& h, const SketchConfig& config) {
    const std::uint64_t m = config.m();
    const auto c0 = h[0];
    const auto c_sat = h[static_cast<std::size_t>(config.max_value())];
    if (c0 == m) throw Degenerate(DegenerateKind::zero, "all registers are zero");
    if (c_sat == m) throw Degenerate(DegenerateKind::saturated, "all registers are saturated");

    double mid = 0.0;
    for (int k = config.q(); k >= 1; --k) {
        mid = 0.5 * (mid + static_cast<double>(h[static_cast<std::size_t>(k)]));
    }
    const double numerator = static_cast<double>(m) * static_cast<double>(m - c0);
    const double lower_denominator =
        static_cast<double>(c0) + 1.5 * mid + std::ldexp(static_cast<double>(c_sat), -(config.q() + 1));
    const double upper_denominator = static_cast<double>(c0) + mid;
    return {numerator / lower_denominator, numerator / upper_denominator};
}

MlSolution ml_solve(const RegisterHistogram& h, const SketchConfig& config, const SolverConfig& solver) {
    MlSolution result;
    if (h[0] == config.m()) return result;
    if (h[static_cast<std::size_t>(config.max_value())] == config.m()) {
        result.estimate = std::numeric_limits<double>::infinity();
        return result;
    }

    const double delta = solver.delta(config);
    const Bracket bracket = ml_bracket(h, config);
    auto f = [&](double x) { return ml_root_function(x, h, config); };

    double x_prev = 0.0;
    double f_prev = static_cast<double>(config.m() - h[0]);
    double x = bracket.lower;
    double fx = f(x);
    result.estimate = x;

    for (int iteration = 1; iteration <= solver.max_iterations; ++iteration) {
        // f is convex and decreasing; starting left of the root, iterates
        // approach it from below. A non-positive value means the root is reached
        // to working precision.
        if (fx <= 0.0) return result;
        double next;
        if (solver.method == RootMethod::newton) {
            next = x - fx / ml_root_function_derivative(x, h, config);
        } else {
            const double slope = fx - f_prev;
            if (slope >= 0.0) return result;
            next = x - fx * (x - x_prev) / slope;
        }
        if (!(next > x)) return result;
        result.iterations = iteration;
        result.iterates.push_back(next);
        result.estimate = next;
        if ((next - x) < delta * next) return result;
        x_prev = x;
        f_prev = fx;
        x = next;
        fx = f(x);
    }
    throw NoConvergence("ML secant iteration did not converge within " +
                        std::to_string(solver.max_iterations) + " iterations");
}

double ml_estimate(const RegisterHistogram& h, const SketchConfig& config, const SolverConfig& solver) {
    return ml_solve(h, config, solver).estimate;
}

}  // namespace hll
