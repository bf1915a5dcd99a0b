#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "lazygp/errors.hpp"

namespace lazygp {

namespace detail {

inline double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
    return acc;
}

// Relative pivot floor: exact arithmetic would keep reduced pivots positive
// for SPD inputs, floating point does not.
inline double spd_floor(double diagonal) {
    return 1e-12 * std::max(1.0, diagonal);
}

} // namespace detail

// Dense row-major matrix. Just enough surface to carry covariance matrices
// around; not a general linear-algebra type.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Lower-triangular Cholesky factor stored as packed rows (row i holds i+1
/// entries), so growing by one sample appends one contiguous row and never
/// touches what is already there.
class CholeskyFactor {
public:
    CholeskyFactor() = default;

    std::size_t size() const noexcept { return n_; }
    bool empty() const noexcept { return n_ == 0; }

    // Entry (i, j); zero above the diagonal.
    double at(std::size_t i, std::size_t j) const {
        return j > i ? 0.0 : entries_[offset(i) + j];
    }

    double diagonal(std::size_t i) const { return entries_[offset(i) + i]; }

    std::span<const double> row(std::size_t i) const {
        return {entries_.data() + offset(i), i + 1};
    }

    void reserve(std::size_t n) { entries_.reserve(offset(n)); }

    // Appends row (q..., d). Callers are responsible for d > 0.
    void append_row(std::span<const double> q, double d) {
        entries_.insert(entries_.end(), q.begin(), q.end());
        entries_.push_back(d);
        ++n_;
    }

private:
    static std::size_t offset(std::size_t i) { return i * (i + 1) / 2; }

    std::size_t n_ = 0;
    std::vector<double> entries_;

    friend CholeskyFactor cholesky_full(const Matrix&);
    friend std::vector<double> forward_solve(const CholeskyFactor&, std::span<const double>);
    friend std::vector<double> backward_solve(const CholeskyFactor&, std::span<const double>);
};

/// Unblocked dense factorization K = L*L^T, Theta(n^3).
/// Throws AsymmetricInput if K is visibly not symmetric and
/// NotPositiveDefinite(i) when the reduced pivot of row i falls below the
/// relative floor.
inline CholeskyFactor cholesky_full(const Matrix& K) {
    const std::size_t n = K.rows();
    if (K.cols() != n) throw DimensionMismatch("cholesky_full: matrix must be square");

    double max_abs = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            max_abs = std::max(max_abs, std::abs(K(i, j)));
    const double asym_tol = 1e-9 * std::max(1.0, max_abs);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(K(i, j) - K(j, i)) > asym_tol)
                throw AsymmetricInput("cholesky_full: input is not symmetric at (" +
                                      std::to_string(i) + ", " + std::to_string(j) + ")");

    CholeskyFactor L;
    L.n_ = n;
    L.entries_.resize(n * (n + 1) / 2);
    double* e = L.entries_.data();

    for (std::size_t i = 0; i < n; ++i) {
        double* row_i = e + i * (i + 1) / 2;
        for (std::size_t j = 0; j < i; ++j) {
            const double* row_j = e + j * (j + 1) / 2;
            row_i[j] = (K(i, j) - detail::dot(row_i, row_j, j)) / row_j[j];
        }
        const double pivot = K(i, i) - detail::dot(row_i, row_i, i);
        if (pivot <= detail::spd_floor(K(i, i)))
            throw NotPositiveDefinite(i, pivot);
        row_i[i] = std::sqrt(pivot);
    }
    return L;
}

/// Solves L*x = b by forward substitution, Theta(n^2).
inline std::vector<double> forward_solve(const CholeskyFactor& L, std::span<const double> b) {
    const std::size_t n = L.size();
    if (b.size() != n) throw DimensionMismatch("forward_solve: rhs length does not match factor");

    std::vector<double> x(n);
    const double* e = L.entries_.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double* row_i = e + i * (i + 1) / 2;
        x[i] = (b[i] - detail::dot(row_i, x.data(), i)) / row_i[i];
    }
    return x;
}

/// Solves L^T*x = b, Theta(n^2). Walks rows back-to-front so memory access
/// stays contiguous over the packed layout.
inline std::vector<double> backward_solve(const CholeskyFactor& L, std::span<const double> b) {
    const std::size_t n = L.size();
    if (b.size() != n) throw DimensionMismatch("backward_solve: rhs length does not match factor");

    std::vector<double> x(b.begin(), b.end());
    const double* e = L.entries_.data();
    for (std::size_t j = n; j-- > 0;) {
        const double* row_j = e + j * (j + 1) / 2;
        const double xj = x[j] / row_j[j];
        x[j] = xj;
        for (std::size_t i = 0; i < j; ++i) x[i] -= row_j[i] * xj;
    }
    return x;
}

/// Extends an n x n factor to n+1 given the new covariance column p and the
/// new diagonal c: last row is (q^T, d) with L*q = p and d = sqrt(c - q^T q).
/// Theta(n^2). Existing rows are reused as-is; pass the factor by value and
/// move it in when the old copy is no longer needed.
inline CholeskyFactor extend_factor(CholeskyFactor L, std::span<const double> p, double c) {
    if (p.size() != L.size())
        throw DimensionMismatch("extend_factor: column length does not match factor");

    const std::vector<double> q = forward_solve(L, p);
    const double pivot = c - detail::dot(q.data(), q.data(), q.size());
    if (pivot <= detail::spd_floor(c))
        throw NotPositiveDefinite(L.size(), pivot);

    L.append_row(q, std::sqrt(pivot));
    return L;
}

} // namespace lazygp
