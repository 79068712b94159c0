#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "hll/sketch.hpp"

namespace hll::test {

inline Sketch random_sketch(const SketchConfig& config, std::uint64_t inserts, std::mt19937_64& rng) {
    Sketch s(config);
    for (std::uint64_t i = 0; i < inserts; ++i) s.insert_hash(rng());
    return s;
}

// Histogram with arbitrary counts summing to m.
inline RegisterHistogram random_histogram(const SketchConfig& config, std::mt19937_64& rng) {
    std::vector<std::uint8_t> registers(config.m());
    std::uniform_int_distribution<int> value(0, config.max_value());
    // Concentrate values around a random centre so that typical and extreme
    // states both occur.
    std::uniform_int_distribution<int> centre(0, config.max_value());
    std::uniform_int_distribution<int> spread(0, 3);
    const int c = centre(rng);
    const int w = spread(rng);
    for (auto& r : registers) {
        if (w == 3) {
            r = static_cast<std::uint8_t>(value(rng));
        } else {
            std::uniform_int_distribution<int> near(std::max(0, c - w), std::min(config.max_value(), c + w));
            r = static_cast<std::uint8_t>(near(rng));
        }
    }
    RegisterHistogram h;
    h.counts.assign(static_cast<std::size_t>(config.max_value()) + 1, 0);
    for (auto r : registers) ++h.counts[r];
    return h;
}

inline RegisterHistogram make_histogram(const SketchConfig& config, std::vector<std::uint64_t> counts) {
    counts.resize(static_cast<std::size_t>(config.max_value()) + 1, 0);
    return RegisterHistogram{std::move(counts)};
}

}  // namespace hll::test
