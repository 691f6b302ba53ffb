#pragma once

#include <stdexcept>
#include <string>

namespace fbsde {

/// Invalid input: bad parameters, unknown names, violated preconditions.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure: CFL violation, overflow, too many invalid or floored paths.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The requested point lies outside the set where volatility is alive along the
/// characteristic, so weighted derivative representations do not apply there.
class OutsideGammaZeroError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

}  // namespace fbsde
