#pragma once

#include <stdexcept>
#include <string>

namespace gmc {

/// Precondition on a scalar or structural argument violated.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A point lies outside the set where the quantity is defined
/// (diagonal of the log kernel, outside a shrunken domain, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Non-finite values or a failed factorization.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mollifier scale not resolved by the grid spacing.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameters outside the phase region an operation requires.
class PhaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs that do not fit together (missing levels, mismatched tables).
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gmc
