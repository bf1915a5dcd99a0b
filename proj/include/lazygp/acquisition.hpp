#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "lazygp/detail/parallel.hpp"
#include "lazygp/errors.hpp"
#include "lazygp/gp.hpp"

namespace lazygp {

/// A candidate point in the unit hypercube together with its expected
/// improvement. start_index records which restart converged here; -1 marks
/// the pure-exploration fallback taken when every ascent lands at EI = 0.
struct Suggestion {
    Point x;
    double ei_value = 0.0;
    int start_index = -1;
};

inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

/// Closed-form expected improvement for maximization:
///   gamma = mean - f_best - xi, Z = gamma / std,
///   EI = gamma * Phi(Z) + std * phi(Z)  (0 when std == 0).
inline double expected_improvement(double mean, double std_dev, double f_best, double xi) {
    if (!(std_dev > 0.0)) return 0.0;
    const double gamma = mean - f_best - xi;
    const double z = gamma / std_dev;
    return std::max(gamma * normal_cdf(z) + std_dev * normal_pdf(z), 0.0);
}

inline std::size_t default_restarts(std::size_t dimension) { return 10 * dimension; }

inline double default_dedupe_distance(std::size_t dimension) {
    return 0.05 * std::sqrt(static_cast<double>(dimension));
}

namespace detail {

// log(expected_improvement), finite wherever std > 0. The closed form
// underflows to an exact zero once (mean - f_best - xi) / std drops below
// about -38, which flattens most of the search box into a gradient-free
// plateau; the inner maximization ascends this function instead. Tail values
// use the Mills-ratio continued fraction and its asymptotic series, so the
// ordering stays faithful arbitrarily deep into the tail.
inline double log_expected_improvement(double mean, double std_dev, double f_best, double xi) {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    if (!(std_dev > 0.0)) return kNegInf;
    const double gamma = mean - f_best - xi;
    const double z = gamma / std_dev;

    if (z > -4.0) {
        const double ei = expected_improvement(mean, std_dev, f_best, xi);
        return ei > 0.0 ? std::log(ei) : kNegInf;
    }

    // EI = std * phi(z) * (1 - x * F(x)) with x = -z and F the Mills ratio
    // Phi(-x) / phi(x) = 1 / (x + t); the bracket collapses to t / (x + t),
    // which is cancellation-free.
    const double x = -z;
    double tail = 0.0; // Laplace continued fraction, evaluated backwards
    for (int k = 60; k >= 1; --k) tail = k / (x + tail);
    return std::log(std_dev) + std::log(tail / (x + tail)) - 0.5 * z * z -
           0.5 * std::log(2.0 * std::numbers::pi);
}

inline void clamp_unit(Point& x) {
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
}

inline double distance(const Point& a, const Point& b) {
    return std::sqrt(squared_distance(a, b));
}

struct AscentSettings {
    double fd_step = 1e-5;        // central-difference step
    double step_tolerance = 1e-7; // converged when the accepted step is shorter
    double initial_step = 1.0;    // line search backtracks from a full cube-length move
    double min_step = 1e-8;
    double armijo = 1e-4;
    std::size_t max_iterations = 200;
};

struct AscentResult {
    Point x;
    double log_ei = -std::numeric_limits<double>::infinity();
};

// The acquisition as seen by the inner optimizer: log EI over the posterior,
// with the whole central-difference stencil evaluated through one batched
// posterior pass (one sweep over the factor instead of 2D).
struct AcquisitionSurface {
    const GpState& state;
    double f_best;
    double xi;

    double log_ei_of(const Posterior& post) const {
        return log_expected_improvement(post.mean, std::sqrt(post.variance), f_best, xi);
    }

    double log_ei(const Point& x) const { return log_ei_of(posterior(state, x)); }

    std::vector<double> log_ei_batch(const std::vector<Point>& xs) const {
        const std::vector<Posterior> posts = posterior_batch(state, xs);
        std::vector<double> out(posts.size());
        for (std::size_t i = 0; i < posts.size(); ++i) out[i] = log_ei_of(posts[i]);
        return out;
    }

    double ei(const Point& x) const {
        const Posterior post = posterior(state, x);
        return expected_improvement(post.mean, std::sqrt(post.variance), f_best, xi);
    }

    // Central differences; probes may poke slightly outside the cube, where
    // the posterior is still defined.
    double gradient(const Point& x, double h, Point& grad_out) const {
        const std::size_t dim = x.size();
        std::vector<Point> stencil(2 * dim, x);
        for (std::size_t k = 0; k < dim; ++k) {
            stencil[2 * k][k] += h;
            stencil[2 * k + 1][k] -= h;
        }
        const std::vector<Posterior> posts = posterior_batch(state, stencil);
        double norm_sq = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            double g = (log_ei_of(posts[2 * k]) - log_ei_of(posts[2 * k + 1])) / (2.0 * h);
            if (std::isnan(g)) g = 0.0; // both probes without signal
            else if (std::isinf(g)) g = g > 0.0 ? 1e12 : -1e12;
            grad_out[k] = g;
            norm_sq += g * g;
        }
        return std::sqrt(norm_sq);
    }
};

// Projected ascent of x -> log EI(posterior(x)) with central finite-difference
// gradients and a backtracking line search. Iterates stay inside [0,1]^D.
// A start with no acquisition signal at all (zero posterior spread,
// log EI = -inf) is returned as-is.
inline AscentResult ascend(const AcquisitionSurface& surface, Point start,
                           const AscentSettings& cfg = {}) {
    clamp_unit(start);
    AscentResult current{std::move(start)};
    current.log_ei = surface.log_ei(current.x);
    if (std::isinf(current.log_ei)) return current;

    const std::size_t dim = current.x.size();
    Point gradient(dim);

    // The backtracking ladder is evaluated in rungs of 8 through the batched
    // posterior; the accepted step is still the first rung passing the
    // sufficient-increase test, exactly as when probing one t at a time.
    constexpr std::size_t kLadderRung = 8;
    std::vector<Point> candidates(kLadderRung, Point(dim));

    for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
        const double grad_norm = surface.gradient(current.x, cfg.fd_step, gradient);
        if (grad_norm == 0.0) break;

        bool improved = false;
        double step_norm = 0.0;
        double t = cfg.initial_step;
        while (t >= cfg.min_step && !improved) {
            double rung_t = t;
            std::size_t rungs = 0;
            for (; rungs < kLadderRung && rung_t >= cfg.min_step; ++rungs, rung_t *= 0.5)
                for (std::size_t k = 0; k < dim; ++k)
                    candidates[rungs][k] =
                        std::clamp(current.x[k] + rung_t * gradient[k] / grad_norm, 0.0, 1.0);
            candidates.resize(rungs);
            const std::vector<double> values = surface.log_ei_batch(candidates);
            for (std::size_t r = 0; r < rungs; ++r, t *= 0.5) {
                if (values[r] > current.log_ei + cfg.armijo * t * grad_norm) {
                    step_norm = distance(candidates[r], current.x);
                    current.x = candidates[r];
                    current.log_ei = values[r];
                    improved = true;
                    break;
                }
            }
            candidates.resize(kLadderRung, Point(dim));
        }
        if (!improved || step_norm < cfg.step_tolerance) break;
    }
    return current;
}

} // namespace detail

/// Runs `restarts` independent acquisition ascents from uniform random
/// starts, merges converged points closer than delta_dedupe into their
/// highest-EI representative and returns up to `max_batch` distinct local
/// maxima sorted by EI descending (ranked on the log scale, so points whose
/// EI has underflowed to zero still order by actual promise). If no ascent
/// finds any acquisition signal the result is a single uniform random
/// suggestion with start_index = -1.
inline std::vector<Suggestion> suggest_batch(const GpState& state, std::size_t max_batch,
                                             std::size_t restarts, double xi,
                                             std::mt19937_64& rng,
                                             double delta_dedupe = -1.0) {
    if (state.size() == 0) throw EmptyData("suggest_batch: state has no observations");
    if (max_batch < 1) throw InvalidParams("suggest_batch: max_batch must be >= 1");
    if (restarts < 1) throw InvalidParams("suggest_batch: restarts must be >= 1");

    const std::size_t dim = state.dimension();
    if (delta_dedupe < 0.0) delta_dedupe = default_dedupe_distance(dim);
    const detail::AcquisitionSurface surface{state, state.best_observed(), xi};

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Point> starts(restarts, Point(dim));
    for (Point& s : starts)
        for (double& v : s) v = unit(rng);

    std::vector<detail::AscentResult> results(restarts);
    detail::parallel_for(restarts, [&](std::size_t i) {
        results[i] = detail::ascend(surface, starts[i]);
    });

    std::vector<int> order(restarts);
    for (std::size_t i = 0; i < restarts; ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (results[a].log_ei != results[b].log_ei) return results[a].log_ei > results[b].log_ei;
        return a < b;
    });

    std::vector<Suggestion> batch;
    for (int idx : order) {
        if (batch.size() == max_batch) break;
        const detail::AscentResult& r = results[idx];
        if (std::isinf(r.log_ei)) break; // sorted: no signal in anything after
        bool duplicate = false;
        for (const Suggestion& kept : batch)
            duplicate |= detail::distance(kept.x, r.x) < delta_dedupe;
        if (!duplicate) batch.push_back({r.x, surface.ei(r.x), idx});
    }

    if (batch.empty()) {
        Point x(dim);
        for (double& v : x) v = unit(rng);
        return {Suggestion{std::move(x), 0.0, -1}};
    }
    return batch;
}

/// Best single EI maximum over `restarts` random-start ascents (the batch of
/// size one).
inline Suggestion suggest_one(const GpState& state, std::size_t restarts, double xi,
                              std::mt19937_64& rng) {
    return suggest_batch(state, 1, restarts, xi, rng).front();
}

} // namespace lazygp
