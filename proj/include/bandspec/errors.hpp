#pragma once

/// @file
/// Exception types shared by every bandspec module.
///
/// Each type maps onto one CLI exit code: precondition and configuration
/// problems exit with 1, numerical failures with 2, property violations with 3.

#include <stdexcept>
#include <string>
#include <vector>

namespace bandspec {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated an operation's documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Malformed or incomplete run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed (non-convergence, non-finite data, loss of
/// orthogonality). Carries whatever partial results were available.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what, std::vector<double> partial = {})
        : Error(what), partial_(std::move(partial)) {}

    const std::vector<double>& partial_results() const noexcept { return partial_; }

private:
    std::vector<double> partial_;
};

/// A gap d(j+l) - d(j) vanished where a division by it was required.
class DegenerateGapError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The certificate formula does not apply (a window minimum of the diagonal
/// increments is not positive).
class InapplicableError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A property that must hold by theorem was observed to fail.
class PropertyViolation : public Error {
public:
    using Error::Error;
};

}  // namespace bandspec
