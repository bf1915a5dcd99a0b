#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "lazygp/errors.hpp"
#include "lazygp/kernel.hpp"
#include "lazygp/linalg.hpp"
#include "lazygp/optimizer.hpp"

namespace lazygp {

namespace detail {

// sin(pi * x) with the argument reduced before the multiply, so integer x
// gives an exact zero (plain sin(pi * x) leaves ~1e-16 of residue).
inline double sinpi(double x) {
    const double k = std::nearbyint(x);
    const double s = std::sin(std::numbers::pi * (x - k));
    return std::fmod(std::abs(k), 2.0) == 1.0 ? -s : s;
}

} // namespace detail

/// Negated 1-D Levy value (maximization convention), maximum 0 at x = 1:
///   -[sin^2(pi w) + (w - 1)^2 (1 + sin^2(2 pi w))],  w = 1 + (x - 1) / 4
inline double levy1d(double x) {
    const double w = 1.0 + (x - 1.0) / 4.0;
    const double s1 = detail::sinpi(w);
    const double s2 = detail::sinpi(2.0 * w);
    return -(s1 * s1 + (w - 1.0) * (w - 1.0) * (1.0 + s2 * s2));
}

/// Negated D-dimensional Levy value, maximum 0 at x = (1, ..., 1).
/// D = 1 falls back to the one-dimensional form.
inline double levy(const Point& x) {
    if (x.empty()) throw DimensionMismatch("levy: empty point");
    const std::size_t d = x.size();
    if (d == 1) return levy1d(x[0]);

    const auto w = [&](std::size_t i) { return 1.0 + (x[i] - 1.0) / 4.0; };
    const double s1 = detail::sinpi(w(0));
    double total = s1 * s1;
    for (std::size_t i = 0; i + 1 < d; ++i) {
        const double wi = w(i);
        const double s = std::sin(std::numbers::pi * wi + 1.0);
        total += (wi - 1.0) * (wi - 1.0) * (1.0 + 10.0 * s * s);
    }
    const double wd = w(d - 1);
    const double sd = detail::sinpi(2.0 * wd);
    total += (wd - 1.0) * (wd - 1.0) * (1.0 + sd * sd);
    return -total;
}

/// Negated sphere, maximum 0 at the origin.
inline double sphere(const Point& x) {
    double total = 0.0;
    for (double v : x) total += v * v;
    return -total;
}

enum class BenchmarkFunction { kLevy, kLevy1d, kSphere, kSyntheticExpensive };

inline BenchmarkFunction parse_benchmark_function(const std::string& name) {
    if (name == "levy") return BenchmarkFunction::kLevy;
    if (name == "levy1d") return BenchmarkFunction::kLevy1d;
    if (name == "sphere") return BenchmarkFunction::kSphere;
    if (name == "synthetic-expensive") return BenchmarkFunction::kSyntheticExpensive;
    throw InvalidParams("unknown benchmark function \"" + name + "\"");
}

/// Test-problem description. The synthetic-expensive variant squashes the
/// Levy value into (-1, 0] and adds evaluation delay and observation noise,
/// standing in for objectives whose cost dwarfs the surrogate update.
struct BenchmarkSpec {
    BenchmarkFunction function = BenchmarkFunction::kLevy;
    std::size_t dimension = 5;
    Bounds bounds;            // defaults to [-10, 10]^D when empty
    double delay_s = 0.0;     // synthetic-expensive only
    double observation_noise = 0.0;

    void validate() const {
        if (dimension < 1) throw InvalidParams("BenchmarkSpec: dimension must be >= 1");
        if (function == BenchmarkFunction::kLevy1d && dimension != 1)
            throw InvalidParams("BenchmarkSpec: levy1d is one-dimensional");
        if (!(delay_s >= 0.0)) throw InvalidParams("BenchmarkSpec: delay must be >= 0");
        if (!(observation_noise >= 0.0))
            throw InvalidParams("BenchmarkSpec: observation noise must be >= 0");
    }

    Bounds effective_bounds() const {
        if (!bounds.empty()) return bounds;
        return Bounds(dimension, {-10.0, 10.0});
    }
};

/// Slow, noisy, bounded variant of the Levy objective: sleeps `delay_s`, then
/// returns levy(x) / (1 + |levy(x)|) plus Gaussian noise. Same maximizer as
/// levy itself.
inline double synthetic_expensive(const BenchmarkSpec& spec, const Point& x,
                                  std::mt19937_64& rng) {
    if (spec.delay_s > 0.0)
        std::this_thread::sleep_for(std::chrono::duration<double>(spec.delay_s));
    const double value = levy(x);
    double out = value / (1.0 + std::abs(value));
    if (spec.observation_noise > 0.0) {
        std::normal_distribution<double> noise(0.0, spec.observation_noise);
        out += noise(rng);
    }
    return out;
}

/// Wraps a spec as a driver objective. The noise stream is guarded by a
/// mutex so batch mode may evaluate concurrently.
inline Objective make_objective(const BenchmarkSpec& spec, std::uint64_t noise_seed = 0) {
    spec.validate();
    switch (spec.function) {
        case BenchmarkFunction::kLevy:
            return [](const Point& x) { return levy(x); };
        case BenchmarkFunction::kLevy1d:
            return [](const Point& x) { return levy1d(x[0]); };
        case BenchmarkFunction::kSphere:
            return [](const Point& x) { return sphere(x); };
        case BenchmarkFunction::kSyntheticExpensive: {
            auto rng = std::make_shared<std::mt19937_64>(noise_seed);
            auto gate = std::make_shared<std::mutex>();
            return [spec, rng, gate](const Point& x) {
                std::scoped_lock lock(*gate);
                return synthetic_expensive(spec, x, *rng);
            };
        }
    }
    throw InvalidParams("make_objective: unhandled benchmark function");
}

// ---------------------------------------------------------------------------
// Naive-vs-lazy factorization timing
// ---------------------------------------------------------------------------

enum class TimingMode { kNaive, kLazy };

inline std::string to_string(TimingMode mode) {
    return mode == TimingMode::kNaive ? "naive" : "lazy";
}

struct TimingRow {
    std::size_t n = 0;
    TimingMode mode = TimingMode::kNaive;
    double seconds = 0.0; // median per-update wall time
};

namespace detail {

inline double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

} // namespace detail

/// Measures the per-iteration surrogate-update cost on growing random sample
/// sets: "naive" times a full factorization at each table size, "lazy" times
/// only the one-row extension. Median of `repetitions` with one discarded
/// warm-up. Single-threaded by design; keep the machine quiet for stable
/// numbers.
inline std::vector<TimingRow> timing_harness(std::size_t n_max, std::size_t step, TimingMode mode,
                                             std::size_t dimension = 5,
                                             std::uint64_t rng_seed = 42,
                                             std::size_t repetitions = 5) {
    if (step < 1 || n_max < 2 * step)
        throw InvalidParams("timing_harness: require step >= 1 and n_max >= 2 * step");
    if (repetitions < 5) repetitions = 5;

    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Point> points(n_max, Point(dimension));
    for (Point& p : points)
        for (double& v : p) v = unit(rng);

    const KernelParams params; // defaults: unit signal/length scale, 1e-6 noise
    std::vector<TimingRow> table;

    const auto time_call = [&](auto&& fn) {
        fn(); // warm-up, discarded
        std::vector<double> samples(repetitions);
        for (double& s : samples) {
            const auto t0 = std::chrono::steady_clock::now();
            fn();
            s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        return detail::median_of(std::move(samples));
    };

    if (mode == TimingMode::kNaive) {
        for (std::size_t n = step; n <= n_max; n += step) {
            const Matrix K = build_covariance({points.begin(), points.begin() + n}, params);
            CholeskyFactor sink;
            const double seconds = time_call([&] { sink = cholesky_full(K); });
            table.push_back({n, mode, seconds});
        }
        return table;
    }

    // Lazy: grow one factor through every size, timing the extension at the
    // table sizes. Copying the previous factor and reserving room for the new
    // row happen outside the timed region, so the sample is the solve-and-
    // append work itself.
    std::vector<Point> active;
    active.push_back(points[0]);
    CholeskyFactor factor = cholesky_full(build_covariance(active, params));
    for (std::size_t n = 2; n <= n_max; ++n) {
        const Point& x_new = points[n - 1];
        auto [p, c] = covariance_column(active, x_new, params);
        if (n % step == 0) {
            std::vector<double> samples(repetitions);
            CholeskyFactor extended;
            for (std::size_t rep = 0; rep <= repetitions; ++rep) {
                CholeskyFactor scratch = factor;
                scratch.reserve(n);
                const auto t0 = std::chrono::steady_clock::now();
                extended = extend_factor(std::move(scratch), p, c);
                const double s =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                if (rep > 0) samples[rep - 1] = s; // first pass is the warm-up
            }
            table.push_back({n, mode, detail::median_of(std::move(samples))});
            factor = std::move(extended);
        } else {
            factor = extend_factor(std::move(factor), p, c);
        }
        active.push_back(x_new);
    }
    return table;
}

} // namespace lazygp
