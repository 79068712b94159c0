#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hll::optim {

// Returns f(x) and writes the gradient into `grad`. Non-finite values are
// treated as infeasible by the line search.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct BfgsOptions {
    // Largest |component| of a trial step; keeps the first, unscaled steps sane.
    double max_step = 2.0;
    // Sufficient-decrease constant of the Armijo condition.
    double armijo = 1e-4;
    int max_backtracks = 60;
};

enum class StepStatus {
    ok,
    // The quasi-Newton direction failed; a steepest-descent step succeeded.
    fallback,
    // Neither direction gave sufficient decrease; x is unchanged.
    failed,
};

// Inverse-Hessian BFGS minimizer with Armijo backtracking, driven one
// iteration at a time so callers can apply their own stopping rules.
class BfgsMinimizer {
public:
    BfgsMinimizer(Objective objective, std::vector<double> x0, BfgsOptions options = {});

    StepStatus step();

    // Removes coordinate i from the search; it keeps its current value.
    void freeze(std::size_t i);
    bool is_frozen(std::size_t i) const { return frozen_[i]; }

    // Re-evaluates the objective at the current point, e.g. after the meaning
    // of a frozen coordinate changed.
    void refresh();

    // Drops the curvature information of coordinate i and sets its inverse
    // Hessian diagonal entry; other coordinates keep theirs.
    void reset_curvature(std::size_t i, double inverse_curvature);

    const std::vector<double>& x() const noexcept { return x_; }
    const std::vector<double>& gradient() const noexcept { return grad_; }
    double value() const noexcept { return value_; }
    int iterations() const noexcept { return iterations_; }
    // Expected decrease g.d of the last attempted line search.
    double last_directional_derivative() const noexcept { return last_slope_; }

private:
    bool line_search(const std::vector<double>& direction);
    void reset_inverse_hessian(double scale);
    std::vector<double> quasi_newton_direction() const;
    std::vector<double> steepest_direction() const;
    void clip(std::vector<double>& direction) const;

    Objective objective_;
    BfgsOptions options_;
    std::size_t n_;
    std::vector<double> x_;
    std::vector<double> grad_;
    double value_;
    std::vector<double> h_;  // inverse Hessian, row-major n x n
    std::vector<bool> frozen_;
    bool scaled_ = false;
    int iterations_ = 0;
    double last_slope_ = 0.0;
};

struct MinimizeResult {
    std::vector<double> x;
    double value;
    int iterations;
    bool converged;
};

// Runs BFGS until the gradient infinity-norm is below tolerance or the
// iteration cap is reached.
MinimizeResult minimize(Objective objective, std::vector<double> x0, double gradient_tolerance,
                        int max_iterations, BfgsOptions options = {});

}  // namespace hll::optim
