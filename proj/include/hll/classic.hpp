#pragma once

#include <cstdint>
#include <numbers>

#include "hll/sketch.hpp"

namespace hll {

// Asymptotic bias-correction constant 1 / (2 ln 2).
inline constexpr double alpha_inf = 1.0 / (2.0 * std::numbers::ln2);

// Harmonic-mean estimate alpha_inf * m^2 / sum_k C_k 2^-k.
double raw_estimate(const RegisterHistogram& h, const SketchConfig& config);

// m * ln(m / c0). Throws ZeroRegistersExhausted when c0 == 0.
double linear_counting_estimate(std::uint64_t c0, std::uint64_t m);

// -2^bits * ln(1 - raw / 2^bits). Throws OutOfDomain when raw >= 2^bits.
double large_range_correction(double raw, int bits);

// Original composite method for 32-bit hashes: linear counting while
// raw <= 5/2 m (and a zero register exists), large-range correction above
// 2^32 / 30, raw estimate in between. Throws UnsupportedConfig if p + q != 32.
double original_estimate(const RegisterHistogram& h, const SketchConfig& config);

}  // namespace hll
