#include "hll/sim.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <thread>

#include "hll/errors.hpp"
#include "hll/joint.hpp"

namespace hll::sim {

namespace {

// Binomial(t, 1/2).
std::uint64_t half_binomial(std::uint64_t t, Engine& engine) {
    if (t == 0) return 0;
    if (t <= 64) {
        const std::uint64_t bits = engine();
        return static_cast<std::uint64_t>(std::popcount(t == 64 ? bits : bits & ((std::uint64_t{1} << t) - 1)));
    }
    return std::binomial_distribution<std::uint64_t>(t, 0.5)(engine);
}

// Uniform in (0, 1), never 0 or 1.
double open_uniform(Engine& engine) { return (static_cast<double>(engine() >> 11) + 0.5) * 0x1p-53; }

// Inverts P(K <= k) = (1 - 2^-k)^count for k <= q, with K <= q + 1.
std::uint8_t sample_register(std::uint64_t count, int q, Engine& engine) {
    const double u = open_uniform(engine);
    // smallest k with 2^-k <= 1 - u^(1/count)
    const double tail = -std::expm1(std::log(u) / static_cast<double>(count));
    const double k = std::ceil(-std::log2(tail));
    if (!(k < q + 1)) return static_cast<std::uint8_t>(q + 1);
    return static_cast<std::uint8_t>(std::max(1.0, k));
}

void distribute(std::uint64_t n, std::size_t lo, std::size_t hi, int q, std::vector<std::uint8_t>& registers,
                Engine& engine) {
    if (n == 0) return;
    if (hi - lo == 1) {
        registers[lo] = sample_register(n, q, engine);
        return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::uint64_t left = half_binomial(n, engine);
    distribute(left, lo, mid, q, registers, engine);
    distribute(n - left, mid, hi, q, registers, engine);
}

// Runs body(i) for i in [0, count) on up to `threads` workers. The first
// exception thrown by any body is rethrown after all workers finish.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count && !failed; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (error) std::rethrow_exception(error);
}

double relative_error(double estimate, double truth) {
    return truth == 0.0 ? estimate : (estimate - truth) / truth;
}

std::uint64_t stream_for(std::size_t group, std::size_t trial) {
    return (static_cast<std::uint64_t>(group) << 32) | static_cast<std::uint64_t>(trial);
}

void require_trials(int trials) {
    if (trials < 2) throw InvalidConfig("at least two trials are required, got " + std::to_string(trials));
}

}  // namespace

Engine make_engine(RngSeed rng) {
    std::seed_seq seq{static_cast<std::uint32_t>(rng.seed), static_cast<std::uint32_t>(rng.seed >> 32),
                      static_cast<std::uint32_t>(rng.stream_id), static_cast<std::uint32_t>(rng.stream_id >> 32)};
    return Engine(seq);
}

Sketch sample_sketch(std::uint64_t n, const SketchConfig& config, Engine& engine) {
    std::vector<std::uint8_t> registers(config.m(), 0);
    distribute(n, 0, registers.size(), config.q(), registers, engine);
    return Sketch::from_registers(config, std::move(registers));
}

Sketch sample_sketch(std::uint64_t n, const SketchConfig& config, RngSeed rng) {
    auto engine = make_engine(rng);
    return sample_sketch(n, config, engine);
}

std::pair<Sketch, Sketch> sample_joint_pair(std::uint64_t card_a, std::uint64_t card_b, std::uint64_t card_x,
                                            const SketchConfig& config, Engine& engine) {
    Sketch a = sample_sketch(card_a, config, engine);
    Sketch b = sample_sketch(card_b, config, engine);
    const Sketch x = sample_sketch(card_x, config, engine);
    a.merge_from(x);
    b.merge_from(x);
    return {std::move(a), std::move(b)};
}

ErrorReport summarize(std::uint64_t cardinality, std::vector<double> errors, int trials, int failures,
                      const std::vector<double>& probabilities) {
    ErrorReport report;
    report.cardinality = cardinality;
    report.trials = trials;
    report.failures = failures;
    const std::size_t n = errors.size();
    if (n == 0) {
        const double nan = std::nan("");
        report.mean_rel_err = report.median_rel_err = report.stddev_rel_err = report.rmse_rel = nan;
        for (double p : probabilities) report.quantiles.push_back({p, nan});
        return report;
    }

    std::sort(errors.begin(), errors.end());
    double sum = 0.0;
    double sum_squares = 0.0;
    for (double e : errors) {
        sum += e;
        sum_squares += e * e;
    }
    const double mean = sum / static_cast<double>(n);
    double centered = 0.0;
    for (double e : errors) centered += (e - mean) * (e - mean);

    auto quantile = [&](double p) {
        const double h = p * static_cast<double>(n - 1);
        const auto i = static_cast<std::size_t>(std::floor(h));
        if (i + 1 >= n) return errors[n - 1];
        return errors[i] + (h - static_cast<double>(i)) * (errors[i + 1] - errors[i]);
    };

    report.mean_rel_err = mean;
    report.median_rel_err = quantile(0.5);
    report.stddev_rel_err = n > 1 ? std::sqrt(centered / static_cast<double>(n - 1)) : 0.0;
    report.rmse_rel = std::sqrt(sum_squares / static_cast<double>(n));
    for (double p : probabilities) report.quantiles.push_back({p, quantile(p)});
    return report;
}

std::vector<ErrorExperimentRow> run_error_experiment(const std::vector<std::uint64_t>& cardinalities, int trials,
                                                     const SketchConfig& config,
                                                     const std::vector<Estimator>& estimators, std::uint64_t seed,
                                                     const ExperimentOptions& options) {
    require_trials(trials);
    const auto t = static_cast<std::size_t>(trials);
    const std::size_t e = estimators.size();
    std::vector<ErrorExperimentRow> rows;
    rows.reserve(cardinalities.size() * e);

    for (std::size_t ci = 0; ci < cardinalities.size(); ++ci) {
        const std::uint64_t n = cardinalities[ci];
        const auto truth = static_cast<double>(n);
        // errors[trial * e + estimator]; NaN marks a failure
        std::vector<double> errors(t * e);
        parallel_for(t, options.threads, [&](std::size_t trial) {
            auto engine = make_engine({seed, stream_for(ci, trial)});
            const Sketch sketch = sample_sketch(n, config, engine);
            const RegisterHistogram h = histogram(sketch);
            for (std::size_t j = 0; j < e; ++j) {
                double value = std::nan("");
                try {
                    value = estimate(estimators[j], h, config);
                } catch (const Error&) {
                }
                errors[trial * e + j] = std::isfinite(value) ? relative_error(value, truth) : std::nan("");
            }
        });

        for (std::size_t j = 0; j < e; ++j) {
            std::vector<double> ok;
            ok.reserve(t);
            int failures = 0;
            for (std::size_t trial = 0; trial < t; ++trial) {
                const double v = errors[trial * e + j];
                if (std::isnan(v)) {
                    ++failures;
                } else {
                    ok.push_back(v);
                }
            }
            rows.push_back({estimators[j], summarize(n, std::move(ok), trials, failures, options.quantiles)});
        }
    }
    return rows;
}

std::vector<JointExperimentRow> run_joint_experiment(const std::vector<JointConfiguration>& configurations,
                                                     int trials, const SketchConfig& config, std::uint64_t seed,
                                                     const ExperimentOptions& options) {
    require_trials(trials);
    const auto t = static_cast<std::size_t>(trials);
    std::vector<JointExperimentRow> rows;
    rows.reserve(configurations.size());

    for (std::size_t ci = 0; ci < configurations.size(); ++ci) {
        const JointConfiguration& c = configurations[ci];
        const std::array<double, 4> truth{static_cast<double>(c.card_a), static_cast<double>(c.card_b),
                                          static_cast<double>(c.card_x),
                                          static_cast<double>(c.card_a + c.card_b + c.card_x)};
        struct Trial {
            std::array<double, 4> ie{};
            std::array<double, 4> ml{};
            bool failed = false;
        };
        std::vector<Trial> results(t);
        parallel_for(t, options.threads, [&](std::size_t trial) {
            auto engine = make_engine({seed, stream_for(ci, trial)});
            const auto [s1, s2] = sample_joint_pair(c.card_a, c.card_b, c.card_x, config, engine);
            const JointStatistic stat = joint_statistic(s1, s2);
            Trial& r = results[trial];
            try {
                const JointEstimate ie = inclusion_exclusion_estimate(stat, Estimator::improved).estimate;
                const JointEstimate ml = joint_ml_solve(stat).estimate;
                r.ie = {ie.lambda_a, ie.lambda_b, ie.lambda_x, ie.union_size()};
                r.ml = {ml.lambda_a, ml.lambda_b, ml.lambda_x, ml.union_size()};
                for (std::size_t k = 0; k < 4; ++k) {
                    r.failed = r.failed || !std::isfinite(r.ie[k]) || !std::isfinite(r.ml[k]);
                }
            } catch (const Error&) {
                r.failed = true;
            }
        });

        JointExperimentRow row;
        row.cardinalities = c;
        row.trials = trials;
        std::array<double, 4> ie_squares{};
        std::array<double, 4> ml_squares{};
        int used = 0;
        for (const Trial& r : results) {
            if (r.failed) {
                ++row.failures;
                continue;
            }
            ++used;
            for (std::size_t k = 0; k < 4; ++k) {
                const double ie_err = relative_error(r.ie[k], truth[k]);
                const double ml_err = relative_error(r.ml[k], truth[k]);
                ie_squares[k] += ie_err * ie_err;
                ml_squares[k] += ml_err * ml_err;
            }
        }
        for (std::size_t k = 0; k < 4; ++k) {
            const double denominator = used > 0 ? static_cast<double>(used) : std::nan("");
            row.rmse_ie[k] = std::sqrt(ie_squares[k] / denominator);
            row.rmse_ml[k] = std::sqrt(ml_squares[k] / denominator);
            row.improvement[k] = row.rmse_ie[k] / row.rmse_ml[k];
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace hll::sim
