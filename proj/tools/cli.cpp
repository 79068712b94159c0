#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <thread>

#include "hll/classic.hpp"
#include "hll/errors.hpp"
#include "hll/improved.hpp"
#include "hll/joint.hpp"
#include "hll/ml.hpp"

namespace hll::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

// Non-negative integer, also accepted in floating-point notation such as 1e6.
std::optional<std::uint64_t> parse_count(std::string_view token) {
    token = trim(token);
    if (token.empty()) return std::nullopt;
    const char* end = token.data() + token.size();
    std::uint64_t value = 0;
    if (auto [ptr, ec] = std::from_chars(token.data(), end, value); ec == std::errc{} && ptr == end) return value;
    double d = 0.0;
    if (auto [ptr, ec] = std::from_chars(token.data(), end, d); ec == std::errc{} && ptr == end) {
        if (std::isfinite(d) && d >= 0.0 && d <= 0x1p53 && d == std::floor(d)) return static_cast<std::uint64_t>(d);
    }
    return std::nullopt;
}

std::uint64_t require_count(std::string_view token, std::string_view what) {
    if (auto v = parse_count(token)) return *v;
    throw InvalidConfig(std::string(what) + ": '" + std::string(trim(token)) + "' is not a non-negative integer");
}

template <typename Row>
void write_quantile(std::ostream& os, const Row& report, double probability) {
    for (const auto& q : report.quantiles) {
        if (q.probability == probability) {
            os << ',' << format_double(q.value);
            return;
        }
    }
    os << ",nan";
}

void emit(const std::string& text, const std::string& path, std::ostream& out, std::ostream& err) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(path, std::ios::binary);
    file << text;
    file.close();
    if (!file) throw Error("cannot write " + path);
    err << "wrote " << path << '\n';
}

unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

struct EstimateArgs {
    std::string sketch;
    std::string sketch2;
    std::string estimator;
};

struct SimulateArgs {
    int p = 0;
    int q = 0;
    std::string cards;
    int trials = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> estimators;
    std::string out;
    unsigned threads = 1;
};

struct JointSimulateArgs {
    int p = 0;
    int q = 0;
    std::string configs;
    std::string configs_file;
    int trials = 0;
    std::uint64_t seed = 0;
    std::string out;
    unsigned threads = 1;
};

struct InspectArgs {
    std::string sketch;
};

struct SampleArgs {
    int p = 0;
    int q = 0;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::string out;
};

const std::vector<std::string> estimator_choices{"original", "raw", "linear", "improved", "ml", "incl-excl", "joint-ml"};

int cmd_estimate(const EstimateArgs& args, std::ostream& out, std::ostream& err) {
    const bool joint = args.estimator == "incl-excl" || args.estimator == "joint-ml";
    if (joint && args.sketch2.empty()) {
        throw InvalidConfig("--estimator " + args.estimator + " needs --sketch2");
    }
    if (!joint && !args.sketch2.empty()) {
        throw InvalidConfig("--sketch2 is only valid with a joint estimator (incl-excl, joint-ml)");
    }

    const Sketch s1 = read_sketch_file(args.sketch);
    if (!joint) {
        const auto estimator = parse_estimator(args.estimator).value();
        if (estimator == Estimator::original && s1.config().p() + s1.config().q() != 32) {
            throw InvalidConfig("the original estimator needs p + q = 32, sketch has " + to_string(s1.config()));
        }
        const double value = estimate(estimator, histogram(s1), s1.config());
        out << "estimator,p,q,estimate\n"
            << args.estimator << ',' << s1.config().p() << ',' << s1.config().q() << ',' << format_double(value)
            << '\n';
        err << args.estimator << " estimate: " << format_double(value) << '\n';
        return ExitCode::ok;
    }

    const Sketch s2 = read_sketch_file(args.sketch2);
    JointEstimate e;
    if (args.estimator == "incl-excl") {
        const auto result = inclusion_exclusion_estimate(s1, s2);
        e = result.estimate;
        if (result.has_negative) err << "warning: inclusion-exclusion produced a negative component\n";
    } else {
        e = joint_ml_estimate(s1, s2);
    }
    out << "estimator,lambda_a,lambda_b,lambda_x,union\n"
        << args.estimator << ',' << format_double(e.lambda_a) << ',' << format_double(e.lambda_b) << ','
        << format_double(e.lambda_x) << ',' << format_double(e.union_size()) << '\n';
    err << "|A| = " << format_double(e.lambda_a) << "  |B| = " << format_double(e.lambda_b)
        << "  |X| = " << format_double(e.lambda_x) << "  |U| = " << format_double(e.union_size()) << '\n';
    return ExitCode::ok;
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
    const SketchConfig config(args.p, args.q);
    const auto cards = parse_cardinalities(args.cards);
    if (args.trials < 2) throw InvalidConfig("--trials must be at least 2");
    std::vector<Estimator> estimators;
    for (const auto& item : args.estimators) {
        for (auto token : split(item, ',')) {
            token = trim(token);
            const auto e = parse_estimator(token);
            if (!e) throw InvalidConfig("unknown estimator '" + std::string(token) + "'");
            if (*e == Estimator::original && args.p + args.q != 32) {
                throw InvalidConfig("the original estimator needs p + q = 32");
            }
            estimators.push_back(*e);
        }
    }
    if (estimators.empty()) throw InvalidConfig("--estimators is empty");

    sim::ExperimentOptions options;
    options.threads = resolve_threads(args.threads);
    const auto rows = sim::run_error_experiment(cards, args.trials, config, estimators, args.seed, options);

    std::ostringstream csv;
    csv << simulate_header << '\n';
    for (const auto& row : rows) {
        const auto& r = row.report;
        csv << name(row.estimator) << ',' << args.p << ',' << args.q << ',' << r.cardinality << ',' << r.trials
            << ',' << format_double(r.mean_rel_err) << ',' << format_double(r.median_rel_err) << ','
            << format_double(r.stddev_rel_err) << ',' << format_double(r.rmse_rel);
        for (double prob : sim::default_quantiles) write_quantile(csv, r, prob);
        csv << ',' << r.failures << '\n';
    }
    emit(csv.str(), args.out, out, err);
    err << rows.size() << " rows (" << cards.size() << " cardinalities x " << estimators.size()
        << " estimators, " << args.trials << " trials)\n";
    return ExitCode::ok;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int cmd_joint_simulate(const JointSimulateArgs& args, std::ostream& out, std::ostream& err) {
    const SketchConfig config(args.p, args.q);
    if (args.trials < 2) throw InvalidConfig("--trials must be at least 2");
    if (!args.configs.empty() && !args.configs_file.empty()) {
        throw InvalidConfig("--configs and --configs-file are mutually exclusive");
    }
    const auto configurations =
        parse_configurations(args.configs_file.empty() ? args.configs : read_text_file(args.configs_file));

    sim::ExperimentOptions options;
    options.threads = resolve_threads(args.threads);
    const auto rows = sim::run_joint_experiment(configurations, args.trials, config, args.seed, options);

    std::ostringstream csv;
    csv << joint_simulate_header << '\n';
    for (const auto& row : rows) {
        const auto& c = row.cardinalities;
        csv << c.card_a << ',' << c.card_b << ',' << c.card_x << ',' << row.trials;
        for (const auto* values : {&row.rmse_ie, &row.rmse_ml, &row.improvement}) {
            for (double v : *values) csv << ',' << format_double(v);
        }
        csv << ',' << row.failures << '\n';
    }
    emit(csv.str(), args.out, out, err);
    err << rows.size() << " configurations, " << args.trials << " pairs each\n";
    return ExitCode::ok;
}

int cmd_inspect(const InspectArgs& args, std::ostream& out, std::ostream&) {
    const Sketch s = read_sketch_file(args.sketch);
    const auto h = histogram(s);
    out << "p: " << s.config().p() << "\nq: " << s.config().q() << "\nm: " << s.config().m() << "\n\nk,count\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k) out << k << ',' << h.counts[k] << '\n';
    return ExitCode::ok;
}

int cmd_sample(const SampleArgs& args, std::ostream&, std::ostream& err) {
    const SketchConfig config(args.p, args.q);
    const Sketch s = sim::sample_sketch(args.n, config, sim::RngSeed{args.seed, args.stream});
    write_sketch_file(args.out, s);
    err << "wrote " << args.out << " (" << to_string(config) << ", n = " << args.n << ")\n";
    return ExitCode::ok;
}

}  // namespace

std::string format_double(double value) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, ptr);
}

std::vector<std::uint64_t> parse_cardinalities(std::string_view spec) {
    spec = trim(spec);
    if (spec.empty()) throw InvalidConfig("empty cardinality list");

    constexpr std::string_view prefix = "logspace:";
    if (spec.substr(0, prefix.size()) == prefix) {
        const auto fields = split(spec.substr(prefix.size()), ':');
        if (fields.size() != 3) {
            throw InvalidConfig("cardinality spec '" + std::string(spec) + "' must be logspace:START:END:POINTS");
        }
        const std::uint64_t start = require_count(fields[0], "logspace START");
        const std::uint64_t end = require_count(fields[1], "logspace END");
        const std::uint64_t points = require_count(fields[2], "logspace POINTS");
        if (start < 1 || end < start) throw InvalidConfig("logspace needs 1 <= START <= END");
        if (points < 1) throw InvalidConfig("logspace needs POINTS >= 1");
        std::vector<std::uint64_t> values;
        const double lo = std::log(static_cast<double>(start));
        const double hi = std::log(static_cast<double>(end));
        for (std::uint64_t i = 0; i < points; ++i) {
            std::uint64_t v = start;
            if (points > 1) {
                if (i + 1 == points) {
                    v = end;
                } else {
                    const double t = static_cast<double>(i) / static_cast<double>(points - 1);
                    v = static_cast<std::uint64_t>(std::llround(std::exp(lo + t * (hi - lo))));
                }
            }
            if (values.empty() || values.back() != v) values.push_back(v);
        }
        return values;
    }

    std::vector<std::uint64_t> values;
    for (auto token : split(spec, ',')) values.push_back(require_count(token, "cardinality"));
    return values;
}

std::vector<sim::JointConfiguration> parse_configurations(std::string_view text) {
    std::vector<sim::JointConfiguration> configurations;
    for (auto line : split(text, '\n')) {
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        for (auto entry : split(line, ';')) {
            entry = trim(entry);
            if (entry.empty()) continue;
            const auto tokens = split(entry, ',');
            if (tokens.size() != 3) {
                throw InvalidConfig("configuration '" + std::string(entry) + "' must be a triple a,b,x");
            }
            std::array<std::uint64_t, 3> v{};
            for (std::size_t i = 0; i < 3; ++i) {
                const auto parsed = parse_count(tokens[i]);
                if (!parsed) {
                    throw InvalidConfig("configuration '" + std::string(entry) + "': bad token '" +
                                        std::string(trim(tokens[i])) + "' at position " + std::to_string(i + 1));
                }
                v[i] = *parsed;
            }
            configurations.push_back({v[0], v[1], v[2]});
        }
    }
    return configurations;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"HyperLogLog cardinality estimation and simulation", "hllsketch"};
    app.require_subcommand(1);

    EstimateArgs estimate_args;
    auto* estimate_cmd = app.add_subcommand("estimate", "Estimate cardinalities from sketch files");
    estimate_cmd->add_option("--sketch", estimate_args.sketch, "Sketch file")->required();
    estimate_cmd->add_option("--sketch2", estimate_args.sketch2, "Second sketch file (joint estimators)");
    estimate_cmd->add_option("--estimator", estimate_args.estimator, "Estimator")
        ->required()
        ->check(CLI::IsMember(estimator_choices));

    SimulateArgs simulate_args;
    auto* simulate_cmd = app.add_subcommand("simulate", "Error statistics of single-sketch estimators");
    simulate_cmd->add_option("--p", simulate_args.p, "Index bits")->required();
    simulate_cmd->add_option("--q", simulate_args.q, "Rank bits")->required();
    simulate_cmd->add_option("--cards", simulate_args.cards, "Comma list or logspace:START:END:POINTS")
        ->required();
    simulate_cmd->add_option("--trials", simulate_args.trials, "Sketches per cardinality")->required();
    simulate_cmd->add_option("--seed", simulate_args.seed, "Random seed")->required();
    simulate_cmd->add_option("--estimators", simulate_args.estimators, "Comma list of estimators")
        ->required()
        ->delimiter(',');
    simulate_cmd->add_option("--out", simulate_args.out, "Write CSV to this file instead of stdout");
    simulate_cmd->add_option("--threads", simulate_args.threads, "Worker threads (0: all cores)")
        ->capture_default_str();

    JointSimulateArgs joint_args;
    auto* joint_cmd = app.add_subcommand("joint-simulate", "Inclusion-exclusion vs joint ML on sketch pairs");
    joint_cmd->add_option("--p", joint_args.p, "Index bits")->required();
    joint_cmd->add_option("--q", joint_args.q, "Rank bits")->required();
    joint_cmd->add_option("--configs", joint_args.configs, "Triples a,b,x separated by ';'");
    joint_cmd->add_option("--configs-file", joint_args.configs_file, "File with one triple a,b,x per line");
    joint_cmd->add_option("--trials", joint_args.trials, "Sketch pairs per configuration")->required();
    joint_cmd->add_option("--seed", joint_args.seed, "Random seed")->required();
    joint_cmd->add_option("--out", joint_args.out, "Write CSV to this file instead of stdout");
    joint_cmd->add_option("--threads", joint_args.threads, "Worker threads (0: all cores)")->capture_default_str();

    InspectArgs inspect_args;
    auto* inspect_cmd = app.add_subcommand("inspect", "Print parameters and register histogram of a sketch");
    inspect_cmd->add_option("--sketch", inspect_args.sketch, "Sketch file")->required();

    SampleArgs sample_args;
    auto* sample_cmd = app.add_subcommand("sample", "Write a simulated sketch of n distinct elements");
    sample_cmd->add_option("--p", sample_args.p, "Index bits")->required();
    sample_cmd->add_option("--q", sample_args.q, "Rank bits")->required();
    sample_cmd->add_option("--n", sample_args.n, "Number of distinct elements")->required();
    sample_cmd->add_option("--seed", sample_args.seed, "Random seed")->required();
    sample_cmd->add_option("--stream", sample_args.stream, "Random substream")->capture_default_str();
    sample_cmd->add_option("--out", sample_args.out, "Output sketch file")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ExitCode::ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return ExitCode::invalid_arguments;
    }

    try {
        if (estimate_cmd->parsed()) return cmd_estimate(estimate_args, out, err);
        if (simulate_cmd->parsed()) return cmd_simulate(simulate_args, out, err);
        if (joint_cmd->parsed()) return cmd_joint_simulate(joint_args, out, err);
        if (inspect_cmd->parsed()) return cmd_inspect(inspect_args, out, err);
        if (sample_cmd->parsed()) return cmd_sample(sample_args, out, err);
    } catch (const InvalidConfig& e) {
        err << "error: " << e.what() << '\n';
        return ExitCode::invalid_arguments;
    } catch (const ConfigMismatch& e) {
        err << "error: " << e.what() << '\n';
        return ExitCode::config_mismatch;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return ExitCode::domain_error;
    } catch (const NoConvergence& e) {
        err << "error: " << e.what() << '\n';
        return ExitCode::no_convergence;
    } catch (const Error& e) {
        // format, range and I/O errors
        err << "error: " << e.what() << '\n';
        return ExitCode::format_error;
    }
    return ExitCode::invalid_arguments;
}

}  // namespace hll::cli
