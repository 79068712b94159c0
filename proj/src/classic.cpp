#include "hll/classic.hpp"

#include <cmath>
#include <string>

#include "hll/errors.hpp"

namespace hll {

double raw_estimate(const RegisterHistogram& h, const SketchConfig& config) {
    const double m = config.m();
    // Horner-style accumulation from the top keeps every partial sum exact for m <= 2^26.
    double denominator = 0.0;
    for (int k = config.max_value(); k >= 1; --k) {
        denominator = 0.5 * (denominator + static_cast<double>(h[static_cast<std::size_t>(k)]));
    }
    denominator += static_cast<double>(h[0]);
    return alpha_inf * m * m / denominator;
}

double linear_counting_estimate(std::uint64_t c0, std::uint64_t m) {
    if (c0 == 0) {
        throw ZeroRegistersExhausted("linear counting undefined: no zero-valued registers left");
    }
    if (c0 > m) {
        throw DomainError("linear counting requires c0 <= m");
    }
    const double md = static_cast<double>(m);
    return md * std::log(md / static_cast<double>(c0));
}

double large_range_correction(double raw, int bits) {
    const double range = std::ldexp(1.0, bits);
    if (!(raw >= 0.0)) {
        throw DomainError("large-range correction requires a non-negative raw estimate");
    }
    if (raw >= range) {
        throw OutOfDomain("raw estimate " + std::to_string(raw) + " is outside the domain of the "
                          "large-range correction (>= 2^" + std::to_string(bits) + ")");
    }
    return -range * std::log1p(-raw / range);
}

double original_estimate(const RegisterHistogram& h, const SketchConfig& config) {
    if (config.p() + config.q() != 32) {
        throw UnsupportedConfig("original estimator is defined for p + q = 32 only, got " +
                                to_string(config));
    }
    const double raw = raw_estimate(h, config);
    const double m = config.m();
    if (raw <= 2.5 * m && h[0] > 0) {
        return linear_counting_estimate(h[0], config.m());
    }
    if (raw > std::ldexp(1.0, 32) / 30.0) {
        return large_range_correction(raw, 32);
    }
    return raw;
}

}  // namespace hll
