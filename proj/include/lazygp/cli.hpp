#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lazygp/acquisition.hpp"
#include "lazygp/benchmarks.hpp"
#include "lazygp/errors.hpp"
#include "lazygp/gp.hpp"
#include "lazygp/optimizer.hpp"
#include "lazygp/trace_io.hpp"

namespace lazygp {

enum class Subcommand { kOptimize, kTiming, kSelftest };

struct CliConfig {
    Subcommand subcommand = Subcommand::kOptimize;

    // optimize
    std::string function = "levy";
    std::size_t dim = 5;
    std::size_t iterations = 1000;
    std::size_t seeds = 1;
    Lag lag = Lag::infinite();
    std::size_t batch = 1;
    double xi = 0.01;
    std::size_t restarts = 0; // 0 = auto
    std::uint64_t rng_seed = 42;
    std::string output;       // empty = stdout
    TraceFormat format = TraceFormat::kJsonl;
    bool no_timings = false;
    double delay_s = 0.0;
    double obs_noise = 0.0;

    // timing
    std::size_t n_max = 2048;
    std::size_t step = 256;
    std::string timing_mode = "both";
};

// Thrown when --help was requested; carries the text to print.
struct HelpRequested {
    std::string text;
};

/// Strict argument parsing: unknown flags and out-of-range values raise
/// UsageError naming the offending flag. `args` excludes the program name.
inline CliConfig parse_args(std::vector<std::string> args) {
    CliConfig cfg;
    std::string lag_text = "inf";
    std::string format_text = "jsonl";

    CLI::App app{"Bayesian optimization with an incrementally extended Cholesky factor"};
    app.name("lazygp");
    app.require_subcommand(1);

    CLI::App* opt = app.add_subcommand("optimize", "Run a benchmark optimization and emit a trace");
    opt->add_option("--function", cfg.function,
                    "Objective: levy | levy1d | sphere | synthetic-expensive")
        ->capture_default_str()
        ->check(CLI::IsMember({"levy", "levy1d", "sphere", "synthetic-expensive"}));
    CLI::Option* dim_opt = opt->add_option("--dim", cfg.dim, "Input dimension")
                               ->capture_default_str()
                               ->check(CLI::PositiveNumber);
    opt->add_option("--iterations", cfg.iterations, "Suggestion rounds after seeding")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    opt->add_option("--seeds", cfg.seeds, "Random seed evaluations before the loop")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    opt->add_option("--lag", lag_text,
                    "Appends per full kernel refit: a positive integer, or \"inf\" to never refit")
        ->capture_default_str();
    opt->add_option("--batch", cfg.batch, "Suggestions evaluated per round")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    opt->add_option("--xi", cfg.xi, "Expected-improvement exploration offset")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    opt->add_option("--restarts", cfg.restarts,
                    "Ascent restarts per suggestion (0 = auto: 10*dim, at least 4*batch)")
        ->capture_default_str();
    opt->add_option("--rng-seed", cfg.rng_seed, "Run RNG seed")->capture_default_str();
    opt->add_option("--output", cfg.output, "Trace file path (default: stdout)")
        ->capture_default_str();
    opt->add_option("--format", format_text, "Trace format: jsonl | csv")
        ->capture_default_str()
        ->check(CLI::IsMember({"jsonl", "csv"}));
    opt->add_flag("--no-timings", cfg.no_timings,
                  "Zero the wall-clock fields so identical runs emit identical bytes");
    opt->add_option("--delay", cfg.delay_s, "synthetic-expensive: per-evaluation sleep (s)")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    opt->add_option("--obs-noise", cfg.obs_noise,
                    "synthetic-expensive: observation noise standard deviation")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);

    CLI::App* timing = app.add_subcommand("timing", "Measure naive vs lazy factorization cost");
    timing->add_option("--n-max", cfg.n_max, "Largest sample count")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    timing->add_option("--step", cfg.step, "Table granularity")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    timing->add_option("--mode", cfg.timing_mode, "naive | lazy | both")
        ->capture_default_str()
        ->check(CLI::IsMember({"naive", "lazy", "both"}));
    timing->add_option("--dim", cfg.dim, "Input dimension of the random sample set")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    timing->add_option("--rng-seed", cfg.rng_seed, "Sample-set RNG seed")->capture_default_str();
    timing->add_option("--output", cfg.output, "CSV file path (default: stdout)")
        ->capture_default_str();

    CLI::App* selftest_cmd = app.add_subcommand("selftest", "Run the built-in oracle checks");

    try {
        std::reverse(args.begin(), args.end()); // CLI11 consumes back-to-front
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    if (opt->parsed()) {
        cfg.subcommand = Subcommand::kOptimize;
        try {
            cfg.lag = Lag::parse(lag_text);
        } catch (const InvalidParams& e) {
            throw UsageError(std::string("--lag: ") + e.what());
        }
        cfg.format = parse_trace_format(format_text);
        if (cfg.function == "levy1d") {
            if (dim_opt->count() == 0)
                cfg.dim = 1;
            else if (cfg.dim != 1)
                throw UsageError("--dim: levy1d is one-dimensional");
        }
    } else if (timing->parsed()) {
        cfg.subcommand = Subcommand::kTiming;
        if (cfg.n_max < 2 * cfg.step)
            throw UsageError("--n-max: must be at least twice --step");
    } else if (selftest_cmd->parsed()) {
        cfg.subcommand = Subcommand::kSelftest;
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// selftest: fast built-in oracle suite
// ---------------------------------------------------------------------------

namespace detail {

// Gauss-Jordan inverse with partial pivoting plus log|det|. Used only as an
// oracle: it shares no code with the Cholesky path it cross-checks.
inline std::pair<Matrix, double> invert_dense(Matrix a) {
    const std::size_t n = a.rows();
    Matrix inv(n, n);
    for (std::size_t i = 0; i < n; ++i) inv(i, i) = 1.0;
    double log_det = 0.0;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (a(pivot, col) == 0.0) throw Error("invert_dense: singular matrix");
        if (pivot != col)
            for (std::size_t k = 0; k < n; ++k) {
                std::swap(a(pivot, k), a(col, k));
                std::swap(inv(pivot, k), inv(col, k));
            }
        const double diag = a(col, col);
        log_det += std::log(std::abs(diag));
        for (std::size_t k = 0; k < n; ++k) {
            a(col, k) /= diag;
            inv(col, k) /= diag;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double factor = a(r, col);
            if (factor == 0.0) continue;
            for (std::size_t k = 0; k < n; ++k) {
                a(r, k) -= factor * a(col, k);
                inv(r, k) -= factor * inv(col, k);
            }
        }
    }
    return {std::move(inv), log_det};
}

inline std::vector<Point> random_points(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Point> points(n, Point(dim));
    for (Point& p : points)
        for (double& v : p) v = unit(rng);
    return points;
}

inline bool selftest_factor_equivalence(std::string& detail_msg) {
    std::mt19937_64 rng(7);
    const std::vector<Point> points = random_points(200, 5, rng);
    const KernelParams params;

    const CholeskyFactor full = cholesky_full(build_covariance(points, params));

    std::vector<Point> active{points[0]};
    CholeskyFactor grown = cholesky_full(build_covariance(active, params));
    for (std::size_t n = 1; n < points.size(); ++n) {
        auto [p, c] = covariance_column(active, points[n], params);
        grown = extend_factor(std::move(grown), p, c);
        active.push_back(points[n]);
    }

    double max_diff = 0.0;
    for (std::size_t i = 0; i < full.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j)
            max_diff = std::max(max_diff, std::abs(full.at(i, j) - grown.at(i, j)));
    detail_msg = "max |L_full - L_grown| = " + std::to_string(max_diff);
    return max_diff <= 1e-8;
}

inline bool selftest_posterior_oracle(std::string& detail_msg) {
    std::mt19937_64 rng(11);
    const std::size_t n = 30;
    const std::vector<Point> points = random_points(n, 3, rng);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> y(n);
    for (double& v : y) v = gauss(rng);

    const GpState state = fit(points, y, KernelParams{});
    const auto [k_inv, log_det] = invert_dense(build_covariance(points, state.params));

    double worst = 0.0;
    for (std::size_t probe = 0; probe < 5; ++probe) {
        Point x_star(3);
        for (double& v : x_star) v = gauss(rng) * 0.3 + 0.5;

        std::vector<double> k_star(n);
        for (std::size_t i = 0; i < n; ++i) k_star[i] = matern52(points[i], x_star, state.params);

        // quad = k*^T K^-1 k*, mean_std = k*^T K^-1 y_std
        double quad = 0.0, mean_std = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double row_k = 0.0, row_y = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                row_k += k_inv(i, j) * k_star[j];
                row_y += k_inv(i, j) * state.y[j];
            }
            quad += k_star[i] * row_k;
            mean_std += k_star[i] * row_y;
        }
        const double oracle_mean = mean_std * state.y_std + state.y_mean;
        const double oracle_var =
            std::max(state.params.signal_variance - quad, 0.0) * state.y_std * state.y_std;

        const Posterior post = posterior(state, x_star);
        worst = std::max(worst, std::abs(post.mean - oracle_mean));
        worst = std::max(worst, std::abs(post.variance - oracle_var));
    }

    double quad_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += k_inv(i, j) * state.y[j];
        quad_y += state.y[i] * row;
    }
    const double oracle_lml = -0.5 * quad_y - 0.5 * log_det -
                              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    worst = std::max(worst, std::abs(log_marginal_likelihood(state) - oracle_lml));

    detail_msg = "max |implementation - dense oracle| = " + std::to_string(worst);
    return worst <= 1e-8;
}

inline bool selftest_ei_montecarlo(std::string& detail_msg) {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double f_best = 0.7, xi = 0.01;
    double worst_pull = 0.0;
    for (const double z : {-1.0, 0.0, 1.0}) {
        for (const double sigma : {0.5, 2.0}) {
            const double mean = f_best + xi + z * sigma;
            const std::size_t draws = 1'000'000;
            double sum = 0.0, sum_sq = 0.0;
            for (std::size_t i = 0; i < draws; ++i) {
                const double sample = mean + sigma * gauss(rng);
                const double improvement = std::max(sample - f_best - xi, 0.0);
                sum += improvement;
                sum_sq += improvement * improvement;
            }
            const double mc = sum / draws;
            const double se =
                std::sqrt(std::max(sum_sq / draws - mc * mc, 0.0) / static_cast<double>(draws));
            const double analytic = expected_improvement(mean, sigma, f_best, xi);
            const double pull = std::abs(analytic - mc) / std::max(se, 1e-300);
            worst_pull = std::max(worst_pull, pull);
            if (pull > 3.0) {
                detail_msg = "analytic " + std::to_string(analytic) + " vs MC " +
                             std::to_string(mc) + " (" + std::to_string(pull) + " SE)";
                return false;
            }
        }
    }
    detail_msg = "worst deviation = " + std::to_string(worst_pull) + " standard errors";
    return true;
}

inline bool selftest_levy_optimum(std::string& detail_msg) {
    const Point ones(5, 1.0);
    if (std::abs(levy(ones)) > 1e-12) {
        detail_msg = "levy(1,...,1) = " + std::to_string(levy(ones));
        return false;
    }
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> box(-10.0, 10.0);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 100'000; ++i) {
        Point x(5);
        for (double& v : x) v = box(rng);
        best = std::max(best, levy(x));
    }
    detail_msg = "random-search best = " + std::to_string(best);
    return best <= 1e-12;
}

} // namespace detail

/// Fast built-in oracle suite; prints one pass/fail line per group and
/// returns the number of failing groups.
inline int selftest(std::ostream& out = std::cout) {
    struct Group {
        const char* name;
        bool (*fn)(std::string&);
    };
    const Group groups[] = {
        {"factor-equivalence", detail::selftest_factor_equivalence},
        {"posterior-oracle", detail::selftest_posterior_oracle},
        {"ei-montecarlo", detail::selftest_ei_montecarlo},
        {"levy-optimum", detail::selftest_levy_optimum},
    };
    int failures = 0;
    for (const Group& group : groups) {
        std::string detail_msg;
        bool ok = false;
        try {
            ok = group.fn(detail_msg);
        } catch (const std::exception& e) {
            detail_msg = e.what();
        }
        out << (ok ? "[PASS] " : "[FAIL] ") << group.name << ": " << detail_msg << '\n';
        failures += ok ? 0 : 1;
    }
    return failures;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// Full command-line entry point. Exit statuses: 0 success, 1 usage error,
/// 2 runtime or numerical failure.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CliConfig cfg;
    try {
        cfg = parse_args(std::vector<std::string>(argv + 1, argv + argc));
    } catch (const HelpRequested& help) {
        out << help.text;
        return 0;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 1;
    }

    try {
        switch (cfg.subcommand) {
            case Subcommand::kOptimize: {
                BenchmarkSpec spec;
                spec.function = parse_benchmark_function(cfg.function);
                spec.dimension = cfg.dim;
                spec.delay_s = cfg.delay_s;
                spec.observation_noise = cfg.obs_noise;
                spec.validate();

                BoConfig config;
                config.bounds = spec.effective_bounds();
                config.n_seeds = cfg.seeds;
                config.iterations = cfg.iterations;
                config.lag = cfg.lag;
                config.batch_size = cfg.batch;
                config.xi = cfg.xi;
                config.restarts = cfg.restarts;
                config.rng_seed = cfg.rng_seed;

                const Objective objective = make_objective(spec, cfg.rng_seed + 1);
                RunTrace trace =
                    cfg.batch > 1 ? run_parallel(config, objective) : run(config, objective);
                trace.objective_label = cfg.function;

                if (cfg.output.empty()) {
                    if (cfg.format == TraceFormat::kJsonl)
                        write_trace_jsonl(out, trace, !cfg.no_timings);
                    else
                        write_trace_csv(out, trace, !cfg.no_timings);
                } else {
                    emit_trace(trace, cfg.format, cfg.output, !cfg.no_timings);
                }
                return 0;
            }
            case Subcommand::kTiming: {
                std::vector<TimingRow> table;
                if (cfg.timing_mode == "naive" || cfg.timing_mode == "both") {
                    auto rows =
                        timing_harness(cfg.n_max, cfg.step, TimingMode::kNaive, cfg.dim, cfg.rng_seed);
                    table.insert(table.end(), rows.begin(), rows.end());
                }
                if (cfg.timing_mode == "lazy" || cfg.timing_mode == "both") {
                    auto rows =
                        timing_harness(cfg.n_max, cfg.step, TimingMode::kLazy, cfg.dim, cfg.rng_seed);
                    table.insert(table.end(), rows.begin(), rows.end());
                }
                if (cfg.output.empty())
                    write_timing_csv(out, table);
                else
                    emit_timing_csv(table, cfg.output);
                return 0;
            }
            case Subcommand::kSelftest:
                return selftest(out) == 0 ? 0 : 2;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

} // namespace lazygp
