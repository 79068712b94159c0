#include "hll/estimator.hpp"

#include <array>
#include <utility>

#include "hll/classic.hpp"
#include "hll/improved.hpp"
#include "hll/ml.hpp"

namespace hll {

namespace {

constexpr std::array<std::pair<Estimator, std::string_view>, 5> names{{
    {Estimator::raw, "raw"},
    {Estimator::linear, "linear"},
    {Estimator::original, "original"},
    {Estimator::improved, "improved"},
    {Estimator::ml, "ml"},
}};

}  // namespace

std::string_view name(Estimator estimator) {
    for (const auto& [e, text] : names) {
        if (e == estimator) return text;
    }
    return "unknown";
}

std::optional<Estimator> parse_estimator(std::string_view text) {
    for (const auto& [e, candidate] : names) {
        if (candidate == text) return e;
    }
    return std::nullopt;
}

double estimate(Estimator estimator, const RegisterHistogram& h, const SketchConfig& config) {
    switch (estimator) {
        case Estimator::raw: return raw_estimate(h, config);
        case Estimator::linear: return linear_counting_estimate(h[0], config.m());
        case Estimator::original: return original_estimate(h, config);
        case Estimator::improved: return improved_estimate(h, config);
        case Estimator::ml: return ml_estimate(h, config);
    }
    return 0.0;
}

}  // namespace hll
