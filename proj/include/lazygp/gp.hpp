#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lazygp/detail/parallel.hpp"
#include "lazygp/errors.hpp"
#include "lazygp/kernel.hpp"
#include "lazygp/linalg.hpp"

namespace lazygp {

/// How many appends pass between full refactorizations with re-learned kernel
/// parameters. Lag(1) refits on every append (the eager baseline), infinite()
/// never refits (pure lazy mode).
class Lag {
public:
    explicit Lag(std::uint64_t interval) : interval_(interval) {
        if (interval == 0) throw InvalidParams("Lag: interval must be >= 1 (use Lag::infinite())");
    }

    static Lag infinite() { return Lag(); }

    // Accepts a positive integer or the literal "inf".
    static Lag parse(const std::string& text) {
        if (text == "inf") return infinite();
        std::uint64_t value = 0;
        for (char c : text) {
            if (c < '0' || c > '9')
                throw InvalidParams("Lag: expected a positive integer or \"inf\", got \"" + text + "\"");
            value = value * 10 + static_cast<std::uint64_t>(c - '0');
        }
        if (text.empty() || value == 0)
            throw InvalidParams("Lag: expected a positive integer or \"inf\", got \"" + text + "\"");
        return Lag(value);
    }

    bool is_infinite() const noexcept { return interval_ == kInfinite; }
    std::uint64_t interval() const noexcept { return interval_; }

    std::string to_string() const { return is_infinite() ? "inf" : std::to_string(interval_); }

    friend bool operator==(const Lag&, const Lag&) = default;

private:
    Lag() : interval_(kInfinite) {}

    static constexpr std::uint64_t kInfinite = ~std::uint64_t{0};
    std::uint64_t interval_;
};

struct Posterior {
    double mean = 0.0;     // raw objective units
    double variance = 0.0; // raw units squared, clamped at zero
};

/// Surrogate state: observations, standardization constants, the growable
/// Cholesky factor of K_y and the cached solve alpha = K_y^-1 y. Appends and
/// refits produce a new state; readers of an existing state are never
/// disturbed.
struct GpState {
    std::vector<Point> X; // unit-hypercube coordinates
    std::vector<double> y_raw;
    double y_mean = 0.0;
    double y_std = 1.0;
    std::vector<double> y; // standardized
    KernelParams params;
    CholeskyFactor factor;
    std::vector<double> alpha;
    Lag lag = Lag::infinite();
    std::uint64_t appends_since_refit = 0;

    std::size_t size() const noexcept { return X.size(); }
    std::size_t dimension() const { return X.empty() ? 0 : X[0].size(); }

    double best_observed() const {
        return *std::max_element(y_raw.begin(), y_raw.end());
    }
};

namespace detail {

inline std::pair<double, double> standardization_constants(const std::vector<double>& values) {
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    double std_dev = std::sqrt(var / n);
    if (std_dev <= 1e-12 * std::max(1.0, std::abs(mean))) std_dev = 1.0;
    return {mean, std_dev};
}

inline std::vector<double> standardize(const std::vector<double>& values, double mean, double std_dev) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) / std_dev;
    return out;
}

inline std::vector<double> solve_alpha(const CholeskyFactor& L, const std::vector<double>& y) {
    return backward_solve(L, forward_solve(L, y));
}

// Full factorization with one rung of the jitter ladder: on a pivot failure
// the noise variance is bumped to max(noise, 1e-8) * 10 and the factorization
// is retried once; a second failure propagates. Returns the params actually
// used so the state stays consistent with its factor.
struct FactorizedModel {
    KernelParams params;
    CholeskyFactor factor;
    std::vector<double> alpha;
};

inline FactorizedModel factorize_full(const std::vector<Point>& X,
                                      const std::vector<double>& y_standardized,
                                      KernelParams params) {
    try {
        CholeskyFactor factor = cholesky_full(build_covariance(X, params));
        std::vector<double> alpha = solve_alpha(factor, y_standardized);
        return {params, std::move(factor), std::move(alpha)};
    } catch (const NotPositiveDefinite&) {
        params.noise_variance = std::max(params.noise_variance, 1e-8) * 10.0;
    }
    CholeskyFactor factor = cholesky_full(build_covariance(X, params));
    std::vector<double> alpha = solve_alpha(factor, y_standardized);
    return {params, std::move(factor), std::move(alpha)};
}

} // namespace detail

/// Maximizes the log marginal likelihood over a fixed grid of
/// (signal variance, length scale) pairs; the noise variance is held fixed.
/// Ties prefer (1, 1), then the smaller length scale, then the smaller
/// signal variance. Fewer than two observations (or all-equal values) return
/// the defaults.
inline KernelParams learn_params(const std::vector<Point>& X, const std::vector<double>& y_raw,
                                 double noise_variance = 1e-6) {
    const KernelParams defaults{1.0, 1.0, noise_variance};
    if (X.size() < 2) return defaults;

    const auto [y_mean, y_std] = detail::standardization_constants(y_raw);
    bool all_equal = true;
    for (double v : y_raw) all_equal &= (v == y_raw.front());
    if (all_equal) return defaults;
    const std::vector<double> y = detail::standardize(y_raw, y_mean, y_std);

    static constexpr std::array<double, 5> kSignalGrid{0.25, 0.5, 1.0, 2.0, 4.0};
    static constexpr std::array<double, 5> kLengthGrid{0.1, 0.2, 0.5, 1.0, 2.0};

    struct Candidate {
        KernelParams params;
        double lml;
        bool ok;
    };
    std::vector<Candidate> candidates(kSignalGrid.size() * kLengthGrid.size());
    detail::parallel_for(candidates.size(), [&](std::size_t idx) {
        const KernelParams params{kSignalGrid[idx / kLengthGrid.size()],
                                  kLengthGrid[idx % kLengthGrid.size()], noise_variance};
        try {
            const CholeskyFactor factor = cholesky_full(build_covariance(X, params));
            const std::vector<double> alpha = detail::solve_alpha(factor, y);
            double lml = -0.5 * detail::dot(y.data(), alpha.data(), y.size());
            for (std::size_t i = 0; i < factor.size(); ++i) lml -= std::log(factor.diagonal(i));
            lml -= 0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
            candidates[idx] = {params, lml, true};
        } catch (const NotPositiveDefinite&) {
            candidates[idx] = {params, 0.0, false};
        }
    });

    auto preferred = [](const KernelParams& a, const KernelParams& b) {
        const bool a_default = a.signal_variance == 1.0 && a.length_scale == 1.0;
        const bool b_default = b.signal_variance == 1.0 && b.length_scale == 1.0;
        if (a_default != b_default) return a_default;
        if (a.length_scale != b.length_scale) return a.length_scale < b.length_scale;
        return a.signal_variance < b.signal_variance;
    };

    const Candidate* best = nullptr;
    for (const Candidate& c : candidates) {
        if (!c.ok) continue;
        if (best == nullptr || c.lml > best->lml ||
            (c.lml == best->lml && preferred(c.params, best->params)))
            best = &c;
    }
    return best ? best->params : defaults;
}

/// Fits a fresh surrogate: standardizes y, factorizes K_y (one jitter retry)
/// and caches alpha.
inline GpState fit(std::vector<Point> X, std::vector<double> y_raw, KernelParams params,
                   Lag lag = Lag::infinite()) {
    params.validate();
    if (X.empty()) throw EmptyData("fit: need at least one observation");
    if (X.size() != y_raw.size()) throw DimensionMismatch("fit: |X| != |y|");

    GpState state;
    std::tie(state.y_mean, state.y_std) = detail::standardization_constants(y_raw);
    state.y = detail::standardize(y_raw, state.y_mean, state.y_std);

    detail::FactorizedModel model = detail::factorize_full(X, state.y, params);
    state.X = std::move(X);
    state.y_raw = std::move(y_raw);
    state.params = model.params;
    state.factor = std::move(model.factor);
    state.alpha = std::move(model.alpha);
    state.lag = lag;
    state.appends_since_refit = 0;
    return state;
}

/// Posterior mean and variance at x_star, de-standardized to raw objective
/// units. Theta(n^2), dominated by one triangular solve.
inline Posterior posterior(const GpState& state, const Point& x_star) {
    if (x_star.size() != state.dimension())
        throw DimensionMismatch("posterior: query dimension does not match data");

    const std::size_t n = state.size();
    std::vector<double> k_star(n);
    for (std::size_t i = 0; i < n; ++i)
        k_star[i] = detail::matern52_from_sqdist(
            detail::squared_distance(state.X[i], x_star), state.params);

    const double mean_standardized = detail::dot(k_star.data(), state.alpha.data(), n);
    const std::vector<double> v = forward_solve(state.factor, k_star);
    const double variance_standardized =
        state.params.signal_variance - detail::dot(v.data(), v.data(), n);

    Posterior out;
    out.mean = mean_standardized * state.y_std + state.y_mean;
    out.variance = std::max(variance_standardized, 0.0) * state.y_std * state.y_std;
    return out;
}

/// Posterior for several query points at once. Equivalent to calling
/// posterior() per point but solves all right-hand sides in one pass over the
/// factor, which is substantially faster once the factor outgrows cache.
inline std::vector<Posterior> posterior_batch(const GpState& state,
                                              const std::vector<Point>& queries) {
    const std::size_t n = state.size();
    const std::size_t m = queries.size();
    std::vector<Posterior> out(m);
    if (m == 0) return out;
    for (const Point& q : queries)
        if (q.size() != state.dimension())
            throw DimensionMismatch("posterior_batch: query dimension does not match data");

    // B holds the cross-covariance columns side by side (row-major n x m) and
    // is overwritten by the forward substitution.
    std::vector<double> B(n * m);
    std::vector<double> mean_standardized(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double* bi = B.data() + i * m;
        const double alpha_i = state.alpha[i];
        for (std::size_t j = 0; j < m; ++j) {
            bi[j] = detail::matern52_from_sqdist(
                detail::squared_distance(state.X[i], queries[j]), state.params);
            mean_standardized[j] += bi[j] * alpha_i;
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const std::span<const double> row = state.factor.row(i);
        double* bi = B.data() + i * m;
        for (std::size_t k = 0; k < i; ++k) {
            const double l_ik = row[k];
            const double* bk = B.data() + k * m;
            for (std::size_t j = 0; j < m; ++j) bi[j] -= l_ik * bk[j];
        }
        const double inv_diag = 1.0 / row[i];
        for (std::size_t j = 0; j < m; ++j) bi[j] *= inv_diag;
    }

    std::vector<double> v_sq(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* bi = B.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) v_sq[j] += bi[j] * bi[j];
    }

    for (std::size_t j = 0; j < m; ++j) {
        out[j].mean = mean_standardized[j] * state.y_std + state.y_mean;
        out[j].variance =
            std::max(state.params.signal_variance - v_sq[j], 0.0) * state.y_std * state.y_std;
    }
    return out;
}

/// log p(y | X) on the standardized values:
///   -1/2 y^T alpha - sum_i log L_ii - n/2 log 2 pi
inline double log_marginal_likelihood(const GpState& state) {
    const std::size_t n = state.size();
    double lml = -0.5 * detail::dot(state.y.data(), state.alpha.data(), n);
    for (std::size_t i = 0; i < n; ++i) lml -= std::log(state.factor.diagonal(i));
    lml -= 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    return lml;
}

/// Adds one observation. Off the lag boundary this is the lazy path: one
/// factor extension plus two triangular solves, Theta(n^2), with the
/// standardization constants frozen. On the boundary the kernel parameters
/// are re-learned, y is re-standardized and the factor is rebuilt from
/// scratch. If an extension hits a bad pivot the noise is escalated and the
/// enlarged matrix refactorized in full (parameters and standardization kept).
inline GpState append(GpState state, Point x_new, double y_new) {
    if (x_new.size() != state.dimension())
        throw DimensionMismatch("append: point dimension does not match data");

    const bool scheduled_refit =
        !state.lag.is_infinite() && state.appends_since_refit + 1 == state.lag.interval();

    if (scheduled_refit) {
        state.X.push_back(std::move(x_new));
        state.y_raw.push_back(y_new);
        const KernelParams learned =
            learn_params(state.X, state.y_raw, state.params.noise_variance);
        std::tie(state.y_mean, state.y_std) = detail::standardization_constants(state.y_raw);
        state.y = detail::standardize(state.y_raw, state.y_mean, state.y_std);
        detail::FactorizedModel model = detail::factorize_full(state.X, state.y, learned);
        state.params = model.params;
        state.factor = std::move(model.factor);
        state.alpha = std::move(model.alpha);
        state.appends_since_refit = 0;
        return state;
    }

    auto [p, c] = covariance_column(state.X, x_new, state.params);
    state.X.push_back(std::move(x_new));
    state.y_raw.push_back(y_new);
    state.y.push_back((y_new - state.y_mean) / state.y_std);
    try {
        state.factor = extend_factor(std::move(state.factor), p, c);
        state.alpha = detail::solve_alpha(state.factor, state.y);
    } catch (const NotPositiveDefinite&) {
        // Numerical recovery, not a kernel update: escalate the jitter and
        // rebuild in full with the frozen parameters and standardization.
        KernelParams bumped = state.params;
        bumped.noise_variance = std::max(bumped.noise_variance, 1e-8) * 10.0;
        detail::FactorizedModel model = detail::factorize_full(state.X, state.y, bumped);
        state.params = model.params;
        state.factor = std::move(model.factor);
        state.alpha = std::move(model.alpha);
    }
    state.appends_since_refit += 1;
    return state;
}

} // namespace lazygp
