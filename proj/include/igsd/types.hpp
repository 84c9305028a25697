#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace igsd {

using Scalar = double;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A required file is missing or unreadable.
struct IOError : Error {
  using Error::Error;
};

/// A file exists but its contents violate the expected format.
struct FormatError : Error {
  using Error::Error;
};

/// A user-supplied configuration value is invalid or inconsistent.
struct ConfigError : Error {
  using Error::Error;
};

/// A domain value is out of range (e.g. negative edge weight).
struct ValueError : Error {
  using Error::Error;
};

/// Tensor shapes are incompatible for the requested operation.
struct ShapeError : Error {
  using Error::Error;
};

/// A computation produced non-finite values or hit a numerical guard.
struct NumericalError : Error {
  using Error::Error;
};

/// An object is in the wrong state for the requested operation.
struct StateError : Error {
  using Error::Error;
};

/// The batch sampler cannot satisfy its composition constraints.
struct SamplerError : Error {
  using Error::Error;
};

/// The input is degenerate for the requested computation (e.g. one class).
struct DegenerateError : Error {
  using Error::Error;
};

}  // namespace igsd
