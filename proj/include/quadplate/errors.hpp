#pragma once

#include <stdexcept>
#include <string>

namespace quadplate {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: degenerate geometry, bad indices, out-of-range options.
class InputError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not produce a trustworthy result.
class NumericalError : public Error {
public:
    using Error::Error;
};

class SingularJacobianError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonConvergenceError : public NumericalError {
public:
    NonConvergenceError(const std::string& what, double last_residual)
        : NumericalError(what + " (last residual " + std::to_string(last_residual) + ")"),
          residual_(last_residual) {}

    double last_residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Pole nodes that make the 6x6 interpolation matrix numerically singular.
class DegeneratePolesError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace quadplate
