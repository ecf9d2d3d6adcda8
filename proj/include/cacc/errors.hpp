#pragma once

#include <stdexcept>
#include <string>

namespace cacc {

// Invalid user input or configuration. CLI exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numeric procedure failed to produce a usable result. CLI exit code 2.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An internal consistency check failed (e.g. a table lookup that can only
// miss if the caller broke a precondition).
struct IntegrityError : NumericalError {
  using NumericalError::NumericalError;
};

// Inter-vehicle spacing collapsed to zero during simulation; the
// configuration is unstable.
struct CollisionError : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace cacc
