#pragma once

#include <stdexcept>
#include <string>

namespace heraldlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown, colliding or mismatched mode labels.
class ModeError : public Error {
 public:
  using Error::Error;
};

/// A source spec, meter state or weight vector that is not normalized.
class NormalizationError : public Error {
 public:
  using Error::Error;
};

class ZeroNormError : public Error {
 public:
  using Error::Error;
};

/// Occupation of a (mode, polarization) pair would exceed the configured cap.
class OccupationOverflowError : public Error {
 public:
  using Error::Error;
};

class InvalidDensityMatrixError : public Error {
 public:
  using Error::Error;
};

class NonUnitaryError : public Error {
 public:
  using Error::Error;
};

/// Operation not defined on the given input (e.g. a destructive polarization
/// measurement on a mode that does not hold exactly one photon).
class MeasurementError : public Error {
 public:
  using Error::Error;
};

/// A protocol that cannot proceed: zero success probability, bad arity, etc.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace heraldlab
