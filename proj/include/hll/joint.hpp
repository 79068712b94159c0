#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "hll/estimator.hpp"
#include "hll/sketch.hpp"

namespace hll {

// Sufficient statistic of a sketch pair. For each value k in [0, q+1]:
//   c1_less[k]    = #{i : K1_i = k < K2_i}
//   c1_greater[k] = #{i : K1_i = k > K2_i}
//   c2_less[k]    = #{i : K2_i = k < K1_i}
//   c2_greater[k] = #{i : K2_i = k > K1_i}
//   c_equal[k]    = #{i : K1_i = K2_i = k}
struct JointStatistic {
    SketchConfig config;
    std::vector<std::uint64_t> c1_less;
    std::vector<std::uint64_t> c1_greater;
    std::vector<std::uint64_t> c2_less;
    std::vector<std::uint64_t> c2_greater;
    std::vector<std::uint64_t> c_equal;

    // Statistic of the pair with the sketch roles exchanged.
    JointStatistic swapped() const;

    // Histograms of sketch 1, sketch 2 and their register-wise maximum.
    RegisterHistogram histogram1() const;
    RegisterHistogram histogram2() const;
    RegisterHistogram union_histogram() const;

    friend bool operator==(const JointStatistic&, const JointStatistic&) = default;
};

// Rates of the disjoint parts A = S1 \ S2, B = S2 \ S1 and X = S1 n S2.
struct JointEstimate {
    double lambda_a = 0.0;
    double lambda_b = 0.0;
    double lambda_x = 0.0;

    double union_size() const noexcept { return lambda_a + lambda_b + lambda_x; }
    double size1() const noexcept { return lambda_a + lambda_x; }
    double size2() const noexcept { return lambda_b + lambda_x; }
};

// Throws ConfigMismatch.
JointStatistic joint_statistic(const Sketch& s1, const Sketch& s2);

struct InclusionExclusionResult {
    JointEstimate estimate;
    // Set when any component came out negative; components are not clamped.
    bool has_negative = false;
};

InclusionExclusionResult inclusion_exclusion_estimate(const Sketch& s1, const Sketch& s2,
                                                      Estimator estimator = Estimator::improved);
InclusionExclusionResult inclusion_exclusion_estimate(const JointStatistic& stat,
                                                      Estimator estimator = Estimator::improved);

// Joint Poisson-model log-likelihood. Throws DomainError unless all rates are
// positive and finite.
double joint_log_likelihood(const JointEstimate& est, const JointStatistic& stat);

// Gradient of joint_log_likelihood with respect to (ln lambda_a, ln lambda_b, ln lambda_x).
std::array<double, 3> joint_gradient(const JointEstimate& est, const JointStatistic& stat);

struct JointSolverConfig {
    double epsilon = 1e-2;
    int max_iterations = 500;

    double delta(const SketchConfig& config) const;
};

struct JointMlSolution {
    JointEstimate estimate;
    JointEstimate initial;
    int iterations = 0;
    // Components driven to zero (a, b, x).
    std::array<bool, 3> zeroed{false, false, false};
};

// Maximizes the joint log-likelihood over log-rates with BFGS, starting from
// max(1, inclusion-exclusion). Throws NoConvergence past the iteration cap.
JointMlSolution joint_ml_solve(const JointStatistic& stat, const JointSolverConfig& solver = {});
JointEstimate joint_ml_estimate(const Sketch& s1, const Sketch& s2, const JointSolverConfig& solver = {});

struct ProbabilityBounds {
    double lower;
    double upper;
};

// Approximate range of P(K1 = K2) for Jaccard distance D in [0, 1]:
// [1 + 2 alpha_inf ln(1 - D/2), 1 + 2 alpha_inf ln(1 - D/2 + D^2/16)].
ProbabilityBounds equal_register_probability_bounds(double jaccard_distance);

}  // namespace hll
