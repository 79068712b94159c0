#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "hll/estimator.hpp"
#include "hll/sketch.hpp"

namespace hll::sim {

// A trial's random source is fully determined by (seed, stream_id).
struct RngSeed {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

using Engine = std::mt19937_64;

Engine make_engine(RngSeed rng);

// Exact draw of the register state after inserting n distinct uniformly
// hashed elements, without hashing: elements are split over the registers by
// repeated binomial halving, then each register value comes from its
// closed-form distribution function by inversion.
Sketch sample_sketch(std::uint64_t n, const SketchConfig& config, Engine& engine);
Sketch sample_sketch(std::uint64_t n, const SketchConfig& config, RngSeed rng);

// Sketches of A u X and B u X built from three independent sketches.
std::pair<Sketch, Sketch> sample_joint_pair(std::uint64_t card_a, std::uint64_t card_b, std::uint64_t card_x,
                                            const SketchConfig& config, Engine& engine);

struct Quantile {
    double probability;
    double value;
};

struct ErrorReport {
    std::uint64_t cardinality = 0;
    int trials = 0;
    double mean_rel_err = 0.0;
    double median_rel_err = 0.0;
    double stddev_rel_err = 0.0;
    double rmse_rel = 0.0;
    std::vector<Quantile> quantiles;
    // Trials whose estimator threw or returned a non-finite value; they are
    // excluded from the statistics above.
    int failures = 0;
};

inline const std::vector<double> default_quantiles{0.01, 0.05, 0.25, 0.75, 0.95, 0.99};

// Summary statistics of the given errors. Quantiles interpolate linearly
// between order statistics; stddev uses the n-1 denominator.
ErrorReport summarize(std::uint64_t cardinality, std::vector<double> errors, int trials, int failures,
                      const std::vector<double>& probabilities = default_quantiles);

struct ExperimentOptions {
    unsigned threads = 1;
    std::vector<double> quantiles = default_quantiles;
};

struct ErrorExperimentRow {
    Estimator estimator;
    ErrorReport report;
};

// For every cardinality, samples `trials` sketches and applies every estimator
// to each of them. Rows are ordered by cardinality, then estimator. Relative
// error (est - n) / n is used, absolute error for n = 0. Throws InvalidConfig
// for fewer than two trials.
std::vector<ErrorExperimentRow> run_error_experiment(const std::vector<std::uint64_t>& cardinalities, int trials,
                                                     const SketchConfig& config,
                                                     const std::vector<Estimator>& estimators, std::uint64_t seed,
                                                     const ExperimentOptions& options = {});

struct JointConfiguration {
    std::uint64_t card_a = 0;
    std::uint64_t card_b = 0;
    std::uint64_t card_x = 0;

    friend bool operator==(const JointConfiguration&, const JointConfiguration&) = default;
};

struct JointExperimentRow {
    JointConfiguration cardinalities;
    int trials = 0;
    // Components in order |A|, |B|, |X|, |U|.
    std::array<double, 4> rmse_ie{};
    std::array<double, 4> rmse_ml{};
    // rmse_ie / rmse_ml
    std::array<double, 4> improvement{};
    // Trials where joint ML failed; excluded from both methods' RMSE.
    int failures = 0;
};

// RMSE of the relative errors of inclusion-exclusion (improved estimator, no
// clamping) and joint ML over `trials` sampled sketch pairs per configuration.
// Throws InvalidConfig for fewer than two trials.
std::vector<JointExperimentRow> run_joint_experiment(const std::vector<JointConfiguration>& configurations,
                                                     int trials, const SketchConfig& config, std::uint64_t seed,
                                                     const ExperimentOptions& options = {});

}  // namespace hll::sim
