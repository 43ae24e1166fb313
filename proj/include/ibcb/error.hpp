#pragma once

#include <stdexcept>
#include <string>

namespace ibcb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument shapes do not agree (vector lengths, matrix dims, history payloads).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Cholesky factorization hit a non-positive pivot.
class CholeskyError : public Error {
public:
    CholeskyError(int pivot, double value)
        : Error("matrix is not positive definite: pivot " + std::to_string(pivot) +
                " has value " + std::to_string(value)),
          pivot_(pivot),
          value_(value) {}

    int pivot() const noexcept { return pivot_; }
    double value() const noexcept { return value_; }

private:
    int pivot_;
    double value_;
};

/// File could not be parsed. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace ibcb
