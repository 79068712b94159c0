#pragma once

#include <vector>

#include "hll/sketch.hpp"

namespace hll {

enum class RootMethod {
    secant,
    // Kept for cross-validating the secant iteration in tests.
    newton,
};

// Iteration stops once the relative increment |x_{t+1} - x_t| / x_{t+1}
// drops below delta = epsilon / sqrt(m).
struct SolverConfig {
    double epsilon = 1e-2;
    int max_iterations = 64;
    RootMethod method = RootMethod::secant;

    double delta(const SketchConfig& config) const;
};

// Analytic enclosure of the ML estimate.
struct Bracket {
    double lower;
    double upper;
};

// Poisson-model log-likelihood of rate lambda > 0. Throws DomainError otherwise.
double log_likelihood(double lambda, const RegisterHistogram& h, const SketchConfig& config);

// d/dlambda of log_likelihood.
double log_likelihood_derivative(double lambda, const RegisterHistogram& h, const SketchConfig& config);

// lambda * d/dlambda log_likelihood: monotone decreasing, equals m - C_0 at 0,
// and its unique root is the ML estimate.
double ml_root_function(double lambda, const RegisterHistogram& h, const SketchConfig& config);

// d/dlambda of ml_root_function.
double ml_root_function_derivative(double lambda, const RegisterHistogram& h, const SketchConfig& config);

// Throws Degenerate(zero) if C_0 = m and Degenerate(saturated) if C_{q+1} = m.
Bracket ml_bracket(const RegisterHistogram& h, const SketchConfig& config);

struct MlSolution {
    double estimate = 0.0;
    int iterations = 0;
    // Iterates after the starting points, in order; empty for degenerate inputs.
    std::vector<double> iterates;
};

// Returns 0 for an empty sketch, +infinity if all registers are saturated and
// the root of ml_root_function otherwise. Throws NoConvergence past the cap.
MlSolution ml_solve(const RegisterHistogram& h, const SketchConfig& config, const SolverConfig& solver = {});

double ml_estimate(const RegisterHistogram& h, const SketchConfig& config, const SolverConfig& solver = {});

}  // namespace hll
