#pragma once

// Test-only oracles. Everything here goes through Eigen (dense inverses,
// determinants, LLT) so the checks are independent of the library's own
// factorization path.

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "lazygp/gp.hpp"
#include "lazygp/kernel.hpp"
#include "lazygp/linalg.hpp"

namespace oracles {

inline Eigen::MatrixXd to_eigen(const lazygp::Matrix& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
    return out;
}

inline Eigen::MatrixXd to_eigen(const lazygp::CholeskyFactor& L) {
    const std::size_t n = L.size();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) out(i, j) = L.at(i, j);
    return out;
}

inline lazygp::Matrix from_eigen(const Eigen::MatrixXd& m) {
    lazygp::Matrix out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
    return out;
}

inline std::vector<lazygp::Point> random_points(std::size_t n, std::size_t dim,
                                                std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<lazygp::Point> points(n, lazygp::Point(dim));
    for (lazygp::Point& p : points)
        for (double& v : p) v = unit(rng);
    return points;
}

// Random SPD matrix the way the surrogate builds them: a kernel matrix over
// random points plus diagonal jitter.
inline lazygp::Matrix random_spd(std::size_t n, std::mt19937_64& rng,
                                 const lazygp::KernelParams& params = {1.0, 1.0, 1e-6}) {
    return lazygp::build_covariance(random_points(n, 4, rng), params);
}

struct DensePosterior {
    double mean;
    double variance;
};

// Direct formula mu = k*^T K^-1 y (de-standardized), var = k** - k*^T K^-1 k*,
// evaluated with Eigen's fully-pivoted inverse against the state's own
// frozen standardization constants.
inline DensePosterior dense_posterior(const lazygp::GpState& state, const lazygp::Point& x_star) {
    const std::size_t n = state.size();
    const Eigen::MatrixXd K = to_eigen(lazygp::build_covariance(state.X, state.params));
    const Eigen::MatrixXd K_inv = K.inverse();

    Eigen::VectorXd k_star(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        k_star(i) = lazygp::matern52(state.X[i], x_star, state.params);
        y(i) = state.y[i];
    }
    const double mean_std = k_star.dot(K_inv * y);
    const double var_std = state.params.signal_variance - k_star.dot(K_inv * k_star);
    return {mean_std * state.y_std + state.y_mean,
            std::max(var_std, 0.0) * state.y_std * state.y_std};
}

inline double dense_log_marginal_likelihood(const lazygp::GpState& state) {
    const std::size_t n = state.size();
    const Eigen::MatrixXd K = to_eigen(lazygp::build_covariance(state.X, state.params));
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) y(i) = state.y[i];
    const double quad = y.dot(K.inverse() * y);
    const double log_det = std::log(K.determinant());
    return -0.5 * quad - 0.5 * log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
}

// Draws y ~ N(0, K) through Eigen's own LLT (not the library's factorization).
inline std::vector<double> sample_gp(const lazygp::Matrix& K, std::mt19937_64& rng) {
    const Eigen::MatrixXd Ke = to_eigen(K);
    const Eigen::LLT<Eigen::MatrixXd> llt(Ke);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd z(Ke.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = gauss(rng);
    const Eigen::VectorXd y = llt.matrixL() * z;
    return {y.data(), y.data() + y.size()};
}

} // namespace oracles
