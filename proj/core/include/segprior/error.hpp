#pragma once

#include <stdexcept>
#include <string>

namespace segprior {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Distance transform requested for a mask with no foreground pixels.
class EmptySourceError : public Error {
 public:
  using Error::Error;
};

/// Operation invoked in the wrong object state (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Synthetic data request that cannot be satisfied.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value encountered during optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// File format or filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace segprior
