#pragma once

#include <stdexcept>
#include <string>

namespace imclab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

/// Unregularized log kernel evaluated at x == y.
struct DiagonalSingularity : Error {
  using Error::Error;
};

struct NotPositiveSemiDefinite : Error {
  using Error::Error;
};

struct FactorizationFailure : Error {
  using Error::Error;
};

/// Estimator scale too small for the grid spacing.
struct ScaleUnresolved : Error {
  using Error::Error;
};

/// Annulus halo of the test-function support exits the domain.
struct SupportViolation : Error {
  using Error::Error;
};

struct NonConverged : Error {
  using Error::Error;
};

struct InfeasibleDimension : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace imclab
