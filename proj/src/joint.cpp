#include "hll/joint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hll/classic.hpp"
#include "hll/detail/numerics.hpp"
#include "hll/errors.hpp"
#include "hll/ml.hpp"
#include "hll/optimizer.hpp"

namespace hll {

namespace {

constexpr double zero_rate_threshold = 1e-6;
constexpr int zero_rate_patience = 5;

std::vector<std::uint64_t> add(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                               const std::vector<std::uint64_t>& c) {
    std::vector<std::uint64_t> out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + b[k] + c[k];
    return out;
}

// sum_{k=0}^{q} (a + b + c)[k] 2^-k
double linear_coefficient(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                          const std::vector<std::uint64_t>& c, int q) {
    double z = 0.0;
    for (int k = q; k >= 1; --k) {
        const auto i = static_cast<std::size_t>(k);
        z = 0.5 * (z + static_cast<double>(a[i] + b[i] + c[i]));
    }
    return z + static_cast<double>(a[0] + b[0] + c[0]);
}

// Log-likelihood and (optionally) its gradient in log-rate space. Zero rates
// are allowed and evaluate to the corresponding limits.
double evaluate(double a, double b, double x, const JointStatistic& stat, double* grad) {
    const SketchConfig& config = stat.config;
    const int q = config.q();
    const double m = config.m();

    double value = 0.0;
    double ga = 0.0;
    double gb = 0.0;
    double gx = 0.0;

    for (int k = 1; k <= q + 1; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const double s = std::ldexp(1.0 / m, -std::min(k, q));

        if (k <= q) {
            if (const auto c = static_cast<double>(stat.c1_less[i]); c > 0) {
                const double u = (a + x) * s;
                value += c * detail::log1m_exp_neg(u);
                if (u > 0.0) {
                    const double h = c * detail::x_div_expm1(u) / (a + x);
                    ga += h * a;
                    gx += h * x;
                }
            }
            if (const auto c = static_cast<double>(stat.c2_less[i]); c > 0) {
                const double u = (b + x) * s;
                value += c * detail::log1m_exp_neg(u);
                if (u > 0.0) {
                    const double h = c * detail::x_div_expm1(u) / (b + x);
                    gb += h * b;
                    gx += h * x;
                }
            }
        }
        if (const auto c = static_cast<double>(stat.c1_greater[i]); c > 0) {
            const double u = a * s;
            value += c * detail::log1m_exp_neg(u);
            ga += c * detail::x_div_expm1(u);
        }
        if (const auto c = static_cast<double>(stat.c2_greater[i]); c > 0) {
            const double u = b * s;
            value += c * detail::log1m_exp_neg(u);
            gb += c * detail::x_div_expm1(u);
        }
        if (const auto c = static_cast<double>(stat.c_equal[i]); c > 0) {
            // 1 - e^{-(a+x)s} - e^{-(b+x)s} + e^{-(a+b+x)s}
            //   = (1 - e^{-xs}) + e^{-xs} (1 - e^{-as}) (1 - e^{-bs}), all terms non-negative.
            const double one_minus_a = -std::expm1(-a * s);
            const double one_minus_b = -std::expm1(-b * s);
            const double one_minus_x = -std::expm1(-x * s);
            const double exp_x = std::exp(-x * s);
            const double g = one_minus_x + exp_x * one_minus_a * one_minus_b;
            value += c * std::log(g);
            const double w = c / g;
            ga += w * a * s * std::exp(-a * s) * one_minus_b * exp_x;
            gb += w * b * s * std::exp(-b * s) * one_minus_a * exp_x;
            gx += w * x * s * exp_x * (1.0 - one_minus_a * one_minus_b);
        }
    }

    const double la = linear_coefficient(stat.c1_less, stat.c_equal, stat.c1_greater, q) / m;
    const double lb = linear_coefficient(stat.c2_less, stat.c_equal, stat.c2_greater, q) / m;
    const double lx = linear_coefficient(stat.c1_less, stat.c_equal, stat.c2_less, q) / m;
    value -= a * la + b * lb + x * lx;

    if (grad != nullptr) {
        grad[0] = ga - a * la;
        grad[1] = gb - b * lb;
        grad[2] = gx - x * lx;
    }
    return value;
}

void require_positive_rates(const JointEstimate& est) {
    for (double r : {est.lambda_a, est.lambda_b, est.lambda_x}) {
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw DomainError("joint log-likelihood requires positive finite rates, got " + std::to_string(r));
        }
    }
}

// Second derivative of the objective along coordinate i from its gradient.
double coordinate_curvature(const optim::Objective& objective, const std::vector<double>& x, std::size_t i) {
    constexpr double h = 1e-4;
    std::vector<double> shifted = x;
    std::array<double, 3> up{};
    std::array<double, 3> down{};
    shifted[i] = x[i] + h;
    objective(shifted, up);
    shifted[i] = x[i] - h;
    objective(shifted, down);
    return (up[i] - down[i]) / (2 * h);
}

double sanitize_initial(double v) {
    if (std::isnan(v) || std::isinf(v)) return 1.0;
    return std::max(1.0, v);
}

}  // namespace

JointStatistic JointStatistic::swapped() const {
    return {config, c2_less, c2_greater, c1_less, c1_greater, c_equal};
}

RegisterHistogram JointStatistic::histogram1() const { return {add(c1_less, c_equal, c1_greater)}; }

RegisterHistogram JointStatistic::histogram2() const { return {add(c2_less, c_equal, c2_greater)}; }

RegisterHistogram JointStatistic::union_histogram() const { return {add(c1_greater, c_equal, c2_greater)}; }

JointStatistic joint_statistic(const Sketch& s1, const Sketch& s2) {
    if (s1.config() != s2.config()) {
        throw ConfigMismatch("joint statistic needs equal parameters, got " + to_string(s1.config()) +
                             " and " + to_string(s2.config()));
    }
    const auto size = static_cast<std::size_t>(s1.config().max_value()) + 1;
    JointStatistic stat{s1.config(),
                        std::vector<std::uint64_t>(size, 0),
                        std::vector<std::uint64_t>(size, 0),
                        std::vector<std::uint64_t>(size, 0),
                        std::vector<std::uint64_t>(size, 0),
                        std::vector<std::uint64_t>(size, 0)};
    const auto r1 = s1.registers();
    const auto r2 = s2.registers();
    for (std::size_t i = 0; i < r1.size(); ++i) {
        const auto k1 = r1[i];
        const auto k2 = r2[i];
        if (k1 < k2) {
            ++stat.c1_less[k1];
            ++stat.c2_greater[k2];
        } else if (k1 > k2) {
            ++stat.c1_greater[k1];
            ++stat.c2_less[k2];
        } else {
            ++stat.c_equal[k1];
        }
    }
    return stat;
}

InclusionExclusionResult inclusion_exclusion_estimate(const JointStatistic& stat, Estimator estimator) {
    const double n1 = estimate(estimator, stat.histogram1(), stat.config);
    const double n2 = estimate(estimator, stat.histogram2(), stat.config);
    const double nu = estimate(estimator, stat.union_histogram(), stat.config);
    InclusionExclusionResult result;
    result.estimate = {nu - n2, nu - n1, n1 + n2 - nu};
    result.has_negative =
        result.estimate.lambda_a < 0.0 || result.estimate.lambda_b < 0.0 || result.estimate.lambda_x < 0.0;
    return result;
}

InclusionExclusionResult inclusion_exclusion_estimate(const Sketch& s1, const Sketch& s2, Estimator estimator) {
    return inclusion_exclusion_estimate(joint_statistic(s1, s2), estimator);
}

double joint_log_likelihood(const JointEstimate& est, const JointStatistic& stat) {
    require_positive_rates(est);
    return evaluate(est.lambda_a, est.lambda_b, est.lambda_x, stat, nullptr);
}

std::array<double, 3> joint_gradient(const JointEstimate& est, const JointStatistic& stat) {
    require_positive_rates(est);
    std::array<double, 3> grad{};
    evaluate(est.lambda_a, est.lambda_b, est.lambda_x, stat, grad.data());
    return grad;
}

double JointSolverConfig::delta(const SketchConfig& config) const {
    return epsilon / std::sqrt(static_cast<double>(config.m()));
}

JointMlSolution joint_ml_solve(const JointStatistic& stat, const JointSolverConfig& solver) {
    const SketchConfig& config = stat.config;
    const auto h1 = stat.histogram1();
    const auto h2 = stat.histogram2();
    const std::uint64_t m = config.m();
    const auto top = static_cast<std::size_t>(config.max_value());
    const bool empty1 = h1[0] == m;
    const bool empty2 = h2[0] == m;
    const bool saturated1 = h1[top] == m;
    const bool saturated2 = h2[top] == m;
    constexpr double inf = std::numeric_limits<double>::infinity();

    // Boundary cases where the likelihood has no interior maximum.
    JointMlSolution solution;
    if (empty1 || empty2 || saturated1 || saturated2) {
        JointEstimate& e = solution.estimate;
        if (saturated1 && saturated2) {
            e = {0.0, 0.0, inf};
        } else if (empty1 && empty2) {
            e = {0.0, 0.0, 0.0};
        } else if (empty1) {
            e = {0.0, ml_estimate(h2, config), 0.0};
        } else if (empty2) {
            e = {ml_estimate(h1, config), 0.0, 0.0};
        } else if (saturated1) {
            // Only lambda_b + lambda_x is identifiable; attribute it to the intersection.
            e = {inf, 0.0, ml_estimate(h2, config)};
        } else {
            e = {0.0, inf, ml_estimate(h1, config)};
        }
        solution.initial = e;
        return solution;
    }

    const auto ie = inclusion_exclusion_estimate(stat, Estimator::improved).estimate;
    solution.initial = {sanitize_initial(ie.lambda_a), sanitize_initial(ie.lambda_b),
                        sanitize_initial(ie.lambda_x)};

    std::array<bool, 3> zeroed{false, false, false};
    auto rates = [&zeroed](std::span<const double> phi) {
        std::array<double, 3> r{};
        for (std::size_t i = 0; i < 3; ++i) r[i] = zeroed[i] ? 0.0 : std::exp(phi[i]);
        return r;
    };
    optim::Objective objective = [&](std::span<const double> phi, std::span<double> grad) {
        const auto r = rates(phi);
        const double value = evaluate(r[0], r[1], r[2], stat, grad.data());
        for (double& g : grad) g = -g;
        return -value;
    };

    optim::BfgsMinimizer minimizer(objective,
                                   {std::log(solution.initial.lambda_a), std::log(solution.initial.lambda_b),
                                    std::log(solution.initial.lambda_x)});
    const double delta = solver.delta(config);
    const double log_threshold = std::log(zero_rate_threshold);
    std::array<int, 3> shrinking{0, 0, 0};

    bool converged = false;
    while (minimizer.iterations() < solver.max_iterations) {
        const auto before = minimizer.x();
        const auto status = minimizer.step();
        if (status == optim::StepStatus::failed) {
            // No decrease is representable any more: the expected decrease is
            // at the rounding level of the objective.
            const double noise = 1e-12 * (1.0 + std::fabs(minimizer.value()));
            if (std::fabs(minimizer.last_directional_derivative()) <= noise) {
                converged = true;
                break;
            }
            throw NoConvergence("joint ML line search failed after steepest-descent fallback");
        }

        bool froze = false;
        for (std::size_t i = 0; i < 3; ++i) {
            if (zeroed[i]) continue;
            // Positive minimizer gradient: the likelihood still grows as the rate shrinks.
            if (minimizer.x()[i] < log_threshold && minimizer.gradient()[i] > 0.0) {
                if (++shrinking[i] >= zero_rate_patience) {
                    zeroed[i] = true;
                    minimizer.freeze(i);
                    froze = true;
                }
            } else {
                shrinking[i] = 0;
            }
        }
        if (froze) {
            minimizer.refresh();
            continue;
        }

        bool small = true;
        for (std::size_t i = 0; i < 3; ++i) {
            if (zeroed[i]) continue;
            small = small && std::fabs(std::expm1(minimizer.x()[i] - before[i])) < delta;
        }
        if (!small) continue;

        // Small steps can also come from a poor curvature estimate where the
        // likelihood is flat or convex. Accept only if the Newton step of every
        // free coordinate, with curvature from differenced gradients, is below
        // delta; otherwise restart that coordinate's curvature.
        bool stalled = false;
        for (std::size_t i = 0; i < 3; ++i) {
            const double g = minimizer.gradient()[i];
            if (zeroed[i] || std::fabs(g) <= 1e-12 * std::fabs(minimizer.value())) continue;
            const double curvature = coordinate_curvature(objective, minimizer.x(), i);
            if (curvature > 0.0 && std::fabs(g) <= delta * curvature) continue;
            minimizer.reset_curvature(i, curvature > 0.0 ? 1.0 / curvature : 1.0 / std::fabs(g));
            stalled = true;
        }
        if (!stalled) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw NoConvergence("joint ML estimation did not converge within " +
                            std::to_string(solver.max_iterations) + " iterations");
    }

    const auto r = rates(minimizer.x());
    solution.estimate = {r[0], r[1], r[2]};
    solution.iterations = minimizer.iterations();
    solution.zeroed = zeroed;
    return solution;
}

JointEstimate joint_ml_estimate(const Sketch& s1, const Sketch& s2, const JointSolverConfig& solver) {
    return joint_ml_solve(joint_statistic(s1, s2), solver).estimate;
}

ProbabilityBounds equal_register_probability_bounds(double jaccard_distance) {
    const double d = jaccard_distance;
    if (!(d >= 0.0 && d <= 1.0)) {
        throw DomainError("Jaccard distance must be in [0, 1], got " + std::to_string(d));
    }
    return {1.0 + 2.0 * alpha_inf * std::log1p(-0.5 * d),
            1.0 + 2.0 * alpha_inf * std::log1p(-0.5 * d + d * d / 16.0)};
}

}  // namespace hll
