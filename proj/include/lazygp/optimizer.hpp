#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lazygp/acquisition.hpp"
#include "lazygp/errors.hpp"
#include "lazygp/gp.hpp"

namespace lazygp {

using Bounds = std::vector<std::pair<double, double>>;
using Objective = std::function<double(const Point&)>;

struct BoConfig {
    Bounds bounds;                 // raw-coordinate box, one (low, high) per dimension
    std::size_t n_seeds = 1;
    std::size_t iterations = 1000; // suggestion rounds; one evaluation per round when batch_size == 1
    Lag lag = Lag::infinite();
    std::size_t batch_size = 1;
    double xi = 0.01;
    std::size_t restarts = 0;      // 0 = automatic: 10*dim, at least 4*batch_size in batch mode
    std::uint64_t rng_seed = 42;
    KernelParams kernel;

    std::size_t dimension() const noexcept { return bounds.size(); }

    std::size_t effective_restarts() const {
        if (restarts > 0) return restarts;
        const std::size_t base = default_restarts(dimension());
        return batch_size > 1 ? std::max(base, 4 * batch_size) : base;
    }

    void validate() const {
        if (bounds.empty()) throw InvalidParams("BoConfig: bounds must not be empty");
        for (const auto& [low, high] : bounds)
            if (!(low < high)) throw InvalidParams("BoConfig: bounds must satisfy low < high");
        if (n_seeds < 1) throw InvalidParams("BoConfig: n_seeds must be >= 1");
        if (iterations < 1) throw InvalidParams("BoConfig: iterations must be >= 1");
        if (batch_size < 1) throw InvalidParams("BoConfig: batch_size must be >= 1");
        if (!(xi >= 0.0)) throw InvalidParams("BoConfig: xi must be >= 0");
        kernel.validate();
    }
};

struct TraceRecord {
    std::uint64_t iteration = 0; // 1-based global evaluation index, seeds included
    std::uint64_t round = 0;     // 0 for seeds, suggestion round otherwise
    Point x;                     // raw coordinates
    double y = 0.0;
    double best = 0.0;           // best-so-far, nondecreasing
    double t_factor_s = 0.0;     // surrogate update (fit/extend/refit) wall time
    double t_acq_s = 0.0;        // acquisition wall time, charged to the round's first record
    bool refit = false;          // true when this append was a scheduled full refit
};

struct RunTrace {
    std::vector<TraceRecord> records;
    Point best_x;
    double best_y = 0.0;
    double total_s = 0.0;
    std::uint64_t failures = 0; // objective evaluations that failed and were skipped
    BoConfig config;
    std::string objective_label;
};

/// Affine map from the raw box to the unit hypercube. Throws OutOfBounds when
/// the input leaves the box.
inline Point normalize(const Point& raw, const Bounds& bounds) {
    if (raw.size() != bounds.size())
        throw DimensionMismatch("normalize: point/bounds dimension mismatch");
    Point unit(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
        const auto [low, high] = bounds[k];
        if (raw[k] < low || raw[k] > high)
            throw OutOfBounds("normalize: coordinate " + std::to_string(k) + " outside bounds");
        unit[k] = (raw[k] - low) / (high - low);
    }
    return unit;
}

/// normalize with clamping instead of rejection; sets *clamped when any
/// coordinate had to be pulled back into the box.
inline Point normalize_clamped(const Point& raw, const Bounds& bounds, bool* clamped = nullptr) {
    if (raw.size() != bounds.size())
        throw DimensionMismatch("normalize_clamped: point/bounds dimension mismatch");
    if (clamped) *clamped = false;
    Point unit(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
        const auto [low, high] = bounds[k];
        double u = (raw[k] - low) / (high - low);
        if (u < 0.0 || u > 1.0) {
            u = std::clamp(u, 0.0, 1.0);
            if (clamped) *clamped = true;
        }
        unit[k] = u;
    }
    return unit;
}

inline Point denormalize(const Point& unit, const Bounds& bounds) {
    if (unit.size() != bounds.size())
        throw DimensionMismatch("denormalize: point/bounds dimension mismatch");
    Point raw(unit.size());
    for (std::size_t k = 0; k < unit.size(); ++k) {
        const auto [low, high] = bounds[k];
        raw[k] = low + unit[k] * (high - low);
    }
    return raw;
}

namespace detail {

inline double elapsed_seconds(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

// Evaluates the objective, treating thrown exceptions and non-finite values
// as failures.
inline std::optional<double> try_evaluate(const Objective& objective, const Point& raw) {
    try {
        const double y = objective(raw);
        if (!std::isfinite(y)) return std::nullopt;
        return y;
    } catch (...) {
        return std::nullopt;
    }
}

inline Point draw_unit_point(std::size_t dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Point x(dim);
    for (double& v : x) v = unit(rng);
    return x;
}

inline RunTrace run_impl(BoConfig config, const Objective& objective) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();
    const std::size_t dim = config.dimension();
    const std::size_t batch = config.batch_size;
    std::mt19937_64 rng(config.rng_seed);

    RunTrace trace;
    trace.config = config;

    std::vector<Point> seed_unit;
    std::vector<double> seed_y;
    std::uint64_t iteration = 0;
    std::uint64_t consecutive_failures = 0;
    double best = -std::numeric_limits<double>::infinity();
    Point best_x;

    const auto note_success = [&](const Point& raw, double y) {
        consecutive_failures = 0;
        if (y > best) {
            best = y;
            best_x = raw;
        }
    };
    const auto note_failure = [&] {
        ++trace.failures;
        if (++consecutive_failures >= 3)
            throw ObjectiveFailure(iteration + 1, "3 consecutive objective failures");
    };

    // Seeding: uniform random draws, retried on failure.
    while (seed_unit.size() < config.n_seeds) {
        Point unit = draw_unit_point(dim, rng);
        Point raw = denormalize(unit, config.bounds);
        const std::optional<double> y = try_evaluate(objective, raw);
        if (!y) {
            note_failure();
            continue;
        }
        note_success(raw, *y);
        seed_unit.push_back(std::move(unit));
        seed_y.push_back(*y);
        trace.records.push_back({++iteration, 0, std::move(raw), *y, best, 0.0, 0.0, false});
    }

    const auto t_fit = std::chrono::steady_clock::now();
    GpState state = fit(std::move(seed_unit), std::move(seed_y), config.kernel, config.lag);
    trace.records.back().t_factor_s = elapsed_seconds(t_fit);

    for (std::uint64_t round = 1; round <= config.iterations; ++round) {
        const auto t_acq_start = std::chrono::steady_clock::now();
        std::vector<Suggestion> suggestions =
            suggest_batch(state, batch, config.effective_restarts(), config.xi, rng);
        const double t_acq = elapsed_seconds(t_acq_start);

        // Evaluate the round; the batch path may run evaluations concurrently.
        std::vector<Point> raws(suggestions.size());
        std::vector<std::optional<double>> ys(suggestions.size());
        for (std::size_t i = 0; i < suggestions.size(); ++i)
            raws[i] = denormalize(suggestions[i].x, config.bounds);
        if (batch > 1) {
            parallel_for(suggestions.size(),
                         [&](std::size_t i) { ys[i] = try_evaluate(objective, raws[i]); });
        } else {
            ys[0] = try_evaluate(objective, raws[0]);
            // Sequential mode retries a failed point at a fresh random draw.
            while (!ys[0]) {
                note_failure();
                suggestions[0] = {draw_unit_point(dim, rng), 0.0, -1};
                raws[0] = denormalize(suggestions[0].x, config.bounds);
                ys[0] = try_evaluate(objective, raws[0]);
            }
        }

        // Append successes sequentially in descending-EI order (the order
        // suggest_batch returned them in).
        bool any_success = false;
        bool first_record_of_round = true;
        for (std::size_t i = 0; i < suggestions.size(); ++i) {
            if (!ys[i]) {
                if (batch > 1) ++trace.failures;
                continue;
            }
            any_success = true;
            const double y = *ys[i];
            const auto t_factor_start = std::chrono::steady_clock::now();
            state = append(std::move(state), suggestions[i].x, y);
            const double t_factor = elapsed_seconds(t_factor_start);
            const bool refit = !config.lag.is_infinite() && state.appends_since_refit == 0;
            note_success(raws[i], y);
            trace.records.push_back({++iteration, round, std::move(raws[i]), y, best, t_factor,
                                     first_record_of_round ? t_acq : 0.0, refit});
            first_record_of_round = false;
        }
        if (!any_success)
            throw ObjectiveFailure(iteration + 1, "all evaluations of round " +
                                                      std::to_string(round) + " failed");
        consecutive_failures = 0;
    }

    trace.best_x = std::move(best_x);
    trace.best_y = best;
    trace.total_s = elapsed_seconds(t_start);
    return trace;
}

} // namespace detail

/// Sequential Bayesian optimization: seed, fit, then one suggestion and one
/// evaluation per iteration, appended through the lag-scheduled lazy path.
inline RunTrace run(BoConfig config, const Objective& objective) {
    config.batch_size = 1;
    return detail::run_impl(std::move(config), objective);
}

/// Batch-parallel mode: each round asks for up to batch_size distinct EI
/// local maxima, evaluates them all (concurrently; the objective must be
/// thread-safe) and appends the results sequentially in descending-EI order.
inline RunTrace run_parallel(BoConfig config, const Objective& objective) {
    return detail::run_impl(std::move(config), objective);
}

} // namespace lazygp
