#pragma once

#include <stdexcept>
#include <string>

namespace adc {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad parameters, unreadable or inconsistent files, bad configuration.
class InputError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed (non-finite values, solver breakdown).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Iterative solver did not reach the requested tolerance.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double residual, int iterations)
        : NumericalError(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

} // namespace adc
