#pragma once

#include <stdexcept>
#include <string>

namespace linids {

/// Raised when an iterative solver or a matrix update cannot reach the
/// requested accuracy. `residual` carries the last measured residual.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// The information-gain vector is identically zero, so the information
/// ratio cannot be normalized.
class DegenerateInformation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A per-round invariant check failed while running with assertions on.
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace linids
