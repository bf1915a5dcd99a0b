#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "lazygp/errors.hpp"
#include "lazygp/linalg.hpp"

namespace lazygp {

using Point = std::vector<double>;

/// Matern-5/2 hyperparameters plus the observation-noise variance that lands
/// on the covariance diagonal.
struct KernelParams {
    double signal_variance = 1.0;
    double length_scale = 1.0;
    double noise_variance = 1e-6;

    void validate() const {
        if (!(signal_variance > 0.0))
            throw InvalidParams("KernelParams: signal_variance must be > 0");
        if (!(length_scale > 0.0))
            throw InvalidParams("KernelParams: length_scale must be > 0");
        if (!(noise_variance >= 0.0))
            throw InvalidParams("KernelParams: noise_variance must be >= 0");
    }
};

namespace detail {

inline constexpr double kSqrt5 = 2.2360679774997896964091736687313;

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double diff = a[k] - b[k];
        acc += diff * diff;
    }
    return acc;
}

inline double matern52_from_sqdist(double sq_dist, const KernelParams& params) {
    const double d = std::sqrt(sq_dist);
    const double s = kSqrt5 * d / params.length_scale;
#ifdef LAZYGP_MUTATE_KERNEL_SIGN
    // Mutation hook for the selftest: flips the exponent sign, which destroys
    // positive-definiteness. Never defined in normal builds.
    const double e = std::exp(s);
#else
    const double e = std::exp(-s);
#endif
    return params.signal_variance *
           (1.0 + s + 5.0 * sq_dist / (3.0 * params.length_scale * params.length_scale)) * e;
}

} // namespace detail

/// Matern-5/2 covariance of two points:
///   sigma^2 * (1 + sqrt(5) d / rho + 5 d^2 / (3 rho^2)) * exp(-sqrt(5) d / rho)
inline double matern52(std::span<const double> a, std::span<const double> b,
                       const KernelParams& params) {
    params.validate();
    if (a.size() != b.size() || a.empty())
        throw DimensionMismatch("matern52: points must share a dimension >= 1");
    return detail::matern52_from_sqdist(detail::squared_distance(a, b), params);
}

/// Noisy covariance matrix K_y[i][j] = matern52(x_i, x_j) + noise * [i == j].
inline Matrix build_covariance(const std::vector<Point>& X, const KernelParams& params) {
    params.validate();
    const std::size_t n = X.size();
    if (n == 0) throw EmptyData("build_covariance: no points");
    const std::size_t dim = X[0].size();
    for (const Point& x : X)
        if (x.size() != dim)
            throw DimensionMismatch("build_covariance: inconsistent point dimensions");

    Matrix K(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        K(i, i) = params.signal_variance + params.noise_variance;
        for (std::size_t j = 0; j < i; ++j) {
            const double k = detail::matern52_from_sqdist(
                detail::squared_distance(X[i], X[j]), params);
            K(i, j) = k;
            K(j, i) = k;
        }
    }
    return K;
}

/// The covariance column a new point appends to K_y: p[i] = matern52(x_i, x_new)
/// and c = sigma^2 + noise. With noise included in c the extended matrix is
/// exactly build_covariance(X + {x_new}).
inline std::pair<std::vector<double>, double> covariance_column(
    const std::vector<Point>& X, const Point& x_new, const KernelParams& params) {
    params.validate();
    std::vector<double> p(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (X[i].size() != x_new.size())
            throw DimensionMismatch("covariance_column: inconsistent point dimensions");
        p[i] = detail::matern52_from_sqdist(detail::squared_distance(X[i], x_new), params);
    }
    return {std::move(p), params.signal_variance + params.noise_variance};
}

} // namespace lazygp
