#pragma once

#include <stdexcept>
#include <string>

namespace mlsis {

/// Raised when a caller passes parameters outside an operation's domain.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Importance weights that are all zero (or not finite) cannot be normalized.
class DegenerateWeights : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An adaptive loop hit its iteration cap or stalled.
class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A forward model could not be evaluated for the given input.
class ModelEvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Broken internal invariant (bracketing failure, singular system, ...).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace mlsis
