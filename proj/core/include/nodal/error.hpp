#pragma once

#include <stdexcept>
#include <string>

namespace nodal {

/// Base of every error thrown by the library. Each subclass names the
/// contract that was violated so callers (and the CLI) can map it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The request exceeds what the integer/enumeration machinery supports.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// The ensemble over an empty frequency set.
class EmptyEnsembleError : public Error {
 public:
  using Error::Error;
};

/// Grid too coarse for the requested estimate.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// An operation precondition (e.g. non-degeneracy) fails.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Excision radius incompatible with the geometry of the singular points.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// The regularity hypothesis of a bound does not hold on the probe grid.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

/// A checked mathematical invariant was violated.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace nodal
