#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lazygp {

// Base class for everything this library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// A diagonal pivot fell at or below the SPD floor; `row` is the zero-based
// row at which the factorization (or extension) broke down.
class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(std::size_t row, double pivot)
        : Error("matrix is not positive definite at row " + std::to_string(row) +
                " (pivot = " + std::to_string(pivot) + ")"),
          row_(row), pivot_(pivot) {}

    std::size_t row() const noexcept { return row_; }
    double pivot() const noexcept { return pivot_; }

private:
    std::size_t row_;
    double pivot_;
};

class AsymmetricInput : public Error {
public:
    using Error::Error;
};

class InvalidParams : public Error {
public:
    using Error::Error;
};

class EmptyData : public Error {
public:
    using Error::Error;
};

class OutOfBounds : public Error {
public:
    using Error::Error;
};

// Raised by the driver when the objective keeps failing; carries the
// iteration at which the run gave up.
class ObjectiveFailure : public Error {
public:
    ObjectiveFailure(std::size_t iteration, const std::string& what_arg)
        : Error("objective failed at iteration " + std::to_string(iteration) +
                ": " + what_arg),
          iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace lazygp
