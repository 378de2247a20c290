#pragma once

#include <stdexcept>
#include <string>

namespace indefshoot {

/// Argument outside the domain of a function (e.g. t outside [0,T]).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A weight, nonlinearity or problem file violates a structural invariant.
class AdmissibilityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Auxiliary parameters violate the preconditions of a formula.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The numerics failed (step size underflow, non-convergence, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Step size underflow during integration.
class StiffnessError : public NumericalError {
public:
    StiffnessError(const std::string& what, double t)
        : NumericalError(what), failure_time_(t) {}
    double failure_time() const noexcept { return failure_time_; }

private:
    double failure_time_;
};

} // namespace indefshoot
