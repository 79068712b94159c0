#pragma once

#include <cmath>

namespace hll::detail {

// u / (e^u - 1), continuous at u = 0.
inline double x_div_expm1(double u) {
    if (std::fabs(u) < 1e-4) return 1.0 - u * (0.5 - u / 12.0);
    return u / std::expm1(u);
}

// log(1 - e^{-u}) for u > 0.
inline double log1m_exp_neg(double u) {
    return std::log(-std::expm1(-u));
}

}  // namespace hll::detail
