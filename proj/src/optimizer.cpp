#include "hll/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace hll::optim {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

BfgsMinimizer::BfgsMinimizer(Objective objective, std::vector<double> x0, BfgsOptions options)
    : objective_(std::move(objective)),
      options_(options),
      n_(x0.size()),
      x_(std::move(x0)),
      grad_(n_, 0.0),
      frozen_(n_, false) {
    if (n_ == 0) throw std::invalid_argument("BfgsMinimizer needs at least one variable");
    value_ = objective_(x_, grad_);
    reset_inverse_hessian(1.0);
}

void BfgsMinimizer::reset_inverse_hessian(double scale) {
    h_.assign(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        if (!frozen_[i]) h_[i * n_ + i] = scale;
    }
}

void BfgsMinimizer::freeze(std::size_t i) {
    frozen_.at(i) = true;
    for (std::size_t j = 0; j < n_; ++j) {
        h_[i * n_ + j] = 0.0;
        h_[j * n_ + i] = 0.0;
    }
    grad_[i] = 0.0;
}

void BfgsMinimizer::refresh() {
    value_ = objective_(x_, grad_);
    for (std::size_t i = 0; i < n_; ++i) {
        if (frozen_[i]) grad_[i] = 0.0;
    }
}

void BfgsMinimizer::reset_curvature(std::size_t i, double inverse_curvature) {
    if (frozen_.at(i)) return;
    for (std::size_t j = 0; j < n_; ++j) {
        h_[i * n_ + j] = 0.0;
        h_[j * n_ + i] = 0.0;
    }
    h_[i * n_ + i] = inverse_curvature;
}

std::vector<double> BfgsMinimizer::quasi_newton_direction() const {
    std::vector<double> d(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) d[i] -= h_[i * n_ + j] * grad_[j];
    }
    return d;
}

std::vector<double> BfgsMinimizer::steepest_direction() const {
    std::vector<double> d(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        if (!frozen_[i]) d[i] = -grad_[i];
    }
    return d;
}

void BfgsMinimizer::clip(std::vector<double>& direction) const {
    double largest = 0.0;
    for (double v : direction) largest = std::max(largest, std::fabs(v));
    if (largest > options_.max_step) {
        const double factor = options_.max_step / largest;
        for (double& v : direction) v *= factor;
    }
}

bool BfgsMinimizer::line_search(const std::vector<double>& direction) {
    const double slope = dot(grad_, direction);
    last_slope_ = slope;
    if (!(slope < 0.0)) return false;

    std::vector<double> trial(n_);
    std::vector<double> trial_grad(n_);
    double t = 1.0;
    for (int attempt = 0; attempt <= options_.max_backtracks; ++attempt, t *= 0.5) {
        for (std::size_t i = 0; i < n_; ++i) trial[i] = x_[i] + t * direction[i];
        const double f = objective_(trial, trial_grad);
        if (!std::isfinite(f) || f > value_ + options_.armijo * t * slope) continue;
        bool finite_gradient = true;
        for (std::size_t i = 0; i < n_; ++i) {
            if (frozen_[i]) trial_grad[i] = 0.0;
            finite_gradient = finite_gradient && std::isfinite(trial_grad[i]);
        }
        if (!finite_gradient) continue;

        std::vector<double> s(n_);
        std::vector<double> y(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            s[i] = trial[i] - x_[i];
            y[i] = trial_grad[i] - grad_[i];
        }
        x_ = trial;
        grad_ = trial_grad;
        value_ = f;

        const double sy = dot(s, y);
        if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
            if (!scaled_) {
                // Rescale the initial guess to the observed curvature before the
                // first update, per coordinate where the secant pair allows it.
                reset_inverse_hessian(sy / dot(y, y));
                for (std::size_t i = 0; i < n_; ++i) {
                    if (!frozen_[i] && s[i] * y[i] > 0.0) h_[i * n_ + i] = s[i] / y[i];
                }
                scaled_ = true;
            }
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            const double rho = 1.0 / sy;
            std::vector<double> hy(n_, 0.0);
            for (std::size_t i = 0; i < n_; ++i) {
                for (std::size_t j = 0; j < n_; ++j) hy[i] += h_[i * n_ + j] * y[j];
            }
            const double yhy = dot(y, hy);
            for (std::size_t i = 0; i < n_; ++i) {
                for (std::size_t j = 0; j < n_; ++j) {
                    h_[i * n_ + j] += (1.0 + rho * yhy) * rho * s[i] * s[j] -
                                      rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        return true;
    }
    return false;
}

StepStatus BfgsMinimizer::step() {
    ++iterations_;
    auto direction = quasi_newton_direction();
    clip(direction);
    if (line_search(direction)) return StepStatus::ok;

    // One steepest-descent attempt from a freshly scaled inverse Hessian.
    const double quasi_newton_slope = last_slope_;
    reset_inverse_hessian(1.0);
    scaled_ = false;
    direction = steepest_direction();
    clip(direction);
    if (line_search(direction)) return StepStatus::fallback;
    last_slope_ = std::min(last_slope_, quasi_newton_slope);
    return StepStatus::failed;
}

MinimizeResult minimize(Objective objective, std::vector<double> x0, double gradient_tolerance,
                        int max_iterations, BfgsOptions options) {
    BfgsMinimizer minimizer(std::move(objective), std::move(x0), options);
    auto small_gradient = [&] {
        return std::all_of(minimizer.gradient().begin(), minimizer.gradient().end(),
                           [&](double g) { return std::fabs(g) <= gradient_tolerance; });
    };
    bool converged = small_gradient();
    while (!converged && minimizer.iterations() < max_iterations) {
        if (minimizer.step() == StepStatus::failed) break;
        converged = small_gradient();
    }
    return {minimizer.x(), minimizer.value(), minimizer.iterations(), converged};
}

}  // namespace hll::optim
