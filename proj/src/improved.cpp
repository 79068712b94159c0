#include "hll/improved.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "hll/classic.hpp"
#include "hll/errors.hpp"

namespace hll {

namespace {

void require_unit_interval(double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw DomainError(std::string(name) + " requires an argument in [0, 1], got " + std::to_string(x));
    }
}

// Shared tail of the improved estimator once the two boundary terms are known.
double combine(const RegisterHistogram& h, const SketchConfig& config, double m_sigma, double m_tau) {
    const double m = config.m();
    if (h[0] == config.m()) return 0.0;
    double z = m_tau;
    for (int k = config.q(); k >= 1; --k) {
        z = 0.5 * (z + static_cast<double>(h[static_cast<std::size_t>(k)]));
    }
    z += m_sigma;
    if (z == 0.0) return std::numeric_limits<double>::infinity();
    return alpha_inf * m * m / z;
}

}  // namespace

double sigma(double x, SpecialFunctionTolerance tol) {
    require_unit_interval(x, "sigma");
    if (x == 1.0) return std::numeric_limits<double>::infinity();
    double sum = x;
    double weight = 1.0;
    while (true) {
        x *= x;
        const double term = x * weight;
        const double next = sum + term;
        if (next == sum || term <= tol.rel_eps * sum) {
            sum = next;
            break;
        }
        sum = next;
        weight += weight;
    }
    return sum;
}

std::vector<double> tau_series_terms(double x, SpecialFunctionTolerance tol) {
    require_unit_interval(x, "tau");
    std::vector<double> terms;
    if (x == 0.0 || x == 1.0) return terms;
    const double log_x = std::log(x);
    double running = 0.0;
    double weight = 1.0;
    // 1 - x^(2^-k) via expm1 keeps full relative precision once x^(2^-k) is close to 1.
    for (int k = 1; k <= 2000; ++k) {
        weight *= 0.5;
        const double one_minus = -std::expm1(log_x * weight);
        const double term = one_minus * one_minus * weight;
        const double next = running + term;
        if (next == running || term <= tol.rel_eps * running) break;
        terms.push_back(term);
        running = next;
    }
    return terms;
}

double tau(double x, SpecialFunctionTolerance tol) {
    const auto terms = tau_series_terms(x, tol);
    if (terms.empty()) return 0.0;
    // Terms decrease monotonically; add the smallest first.
    const double series = std::accumulate(terms.rbegin(), terms.rend(), 0.0);
    return ((1.0 - x) - series) / 3.0;
}

double zeta(double x) {
    const double shift = x - std::floor(x);
    auto term = [shift](int k) {
        const double t = std::exp2(k + shift);
        return t * std::exp(-t);
    };
    // Both tails shrink away from k = 0; accumulate each from its small end.
    double lower = 0.0;
    for (int k = -64; k <= 0; ++k) lower += term(k);
    double upper = 0.0;
    for (int k = 64; k >= 1; --k) upper += term(k);
    return std::numbers::ln2 * (lower + upper);
}

double improved_estimate(const RegisterHistogram& h, const SketchConfig& config) {
    const double m = config.m();
    if (h[0] == config.m()) return 0.0;
    const double c0 = static_cast<double>(h[0]);
    const double c_sat = static_cast<double>(h[static_cast<std::size_t>(config.max_value())]);
    return combine(h, config, m * sigma(c0 / m), m * tau(1.0 - c_sat / m));
}

ImprovedEstimator::ImprovedEstimator(SketchConfig config, bool use_lookup_tables) : config_(config) {
    if (!use_lookup_tables) return;
    const std::uint32_t m = config.m();
    const double md = m;
    sigma_table_.resize(m + 1);
    tau_table_.resize(m + 1);
    for (std::uint32_t c = 0; c <= m; ++c) {
        sigma_table_[c] = md * sigma(c / md);
        tau_table_[c] = md * tau(1.0 - c / md);
    }
}

double ImprovedEstimator::operator()(const RegisterHistogram& h) const {
    if (!uses_lookup_tables()) return improved_estimate(h, config_);
    if (h[0] == config_.m()) return 0.0;
    const auto c_sat = h[static_cast<std::size_t>(config_.max_value())];
    return combine(h, config_, sigma_table_[h[0]], tau_table_[c_sat]);
}

}  // namespace hll
