#pragma once

#include <vector>

#include "hll/sketch.hpp"

namespace hll {

// Series truncation control. Summation stops once the sum reaches a fixed
// point in double precision or the newest term falls below rel_eps * sum.
struct SpecialFunctionTolerance {
    double rel_eps = 1e-16;
};

// sigma(x) = x + sum_{k>=1} x^(2^k) 2^(k-1) on [0, 1]; +infinity at x = 1.
// Throws DomainError outside [0, 1].
double sigma(double x, SpecialFunctionTolerance tol = {});

// tau(x) = (1 - x - sum_{k>=1} (1 - x^(2^-k))^2 2^-k) / 3 on [0, 1].
// Evaluated by the direct series (never via the sigma identity).
double tau(double x, SpecialFunctionTolerance tol = {});

// The terms (1 - x^(2^-k))^2 2^-k, k = 1, 2, ... of the tau series, in
// generation order, up to truncation.
std::vector<double> tau_series_terms(double x, SpecialFunctionTolerance tol = {});

// zeta(x) = ln 2 * sum_k 2^(k+x) exp(-2^(k+x)); periodic with period 1 and
// within 9.885e-6 of 1.
double zeta(double x);

// alpha_inf m^2 / (m sigma(C_0/m) + sum_{k=1}^q C_k 2^-k + m tau(1 - C_{q+1}/m) 2^-q).
// Returns 0 for an empty sketch and +infinity when every register is saturated.
double improved_estimate(const RegisterHistogram& h, const SketchConfig& config);

// Improved estimator bound to one configuration. With lookup tables enabled
// m*sigma(c/m) and m*tau(1 - c/m) are precomputed for c = 0..m; the object is
// immutable afterwards and may be shared between threads.
class ImprovedEstimator {
public:
    explicit ImprovedEstimator(SketchConfig config, bool use_lookup_tables = false);

    double operator()(const RegisterHistogram& h) const;

    const SketchConfig& config() const noexcept { return config_; }
    bool uses_lookup_tables() const noexcept { return !sigma_table_.empty(); }

private:
    SketchConfig config_;
    std::vector<double> sigma_table_;
    std::vector<double> tau_table_;
};

}  // namespace hll
