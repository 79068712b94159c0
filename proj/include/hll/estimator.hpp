#pragma once

#include <optional>
#include <string_view>

#include "hll/sketch.hpp"

namespace hll {

// Single-sketch estimators selectable at run time.
enum class Estimator { raw, linear, original, improved, ml };

std::string_view name(Estimator estimator);
std::optional<Estimator> parse_estimator(std::string_view text);

// Dispatches to the selected estimator; propagates its errors.
double estimate(Estimator estimator, const RegisterHistogram& h, const SketchConfig& config);

}  // namespace hll
