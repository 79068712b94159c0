#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "hll/sim.hpp"

namespace hll::cli {

// Process exit codes.
enum ExitCode : int {
    ok = 0,
    invalid_arguments = 1,
    format_error = 2,
    config_mismatch = 3,
    domain_error = 4,
    no_convergence = 5,
};

// Runs the command line `args` (without the program name). CSV goes to `out`,
// diagnostics and human-readable summaries to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

// Comma list of cardinalities or logspace:START:END:POINTS. Throws InvalidConfig.
std::vector<std::uint64_t> parse_cardinalities(std::string_view spec);

// Triples "a,b,x" separated by ';' or newlines; '#' starts a comment. Throws InvalidConfig.
std::vector<sim::JointConfiguration> parse_configurations(std::string_view text);

inline constexpr std::string_view simulate_header =
    "estimator,p,q,cardinality,trials,mean_rel_err,median_rel_err,stddev_rel_err,rmse_rel,"
    "q01,q05,q25,q75,q95,q99,failures";
inline constexpr std::string_view joint_simulate_header =
    "card_a,card_b,card_x,trials,rmse_ie_a,rmse_ie_b,rmse_ie_x,rmse_ie_u,rmse_ml_a,rmse_ml_b,rmse_ml_x,"
    "rmse_ml_u,impr_a,impr_b,impr_x,impr_u,failures";

}  // namespace hll::cli
