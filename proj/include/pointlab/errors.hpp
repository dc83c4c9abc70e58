#pragma once

#include <stdexcept>
#include <string>

namespace pointlab {

// Bad argument outside an operation's domain (non-finite energy, empty input, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Matrix expected in SL(2,R) but its determinant is off.
class InvalidMatrixError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Two independent routes disagree (winding count vs. secular sign changes, ...).
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Estimate too noisy for the requested decision.
class PrecisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Green function requested too close to an eigenvalue.
class NearEigenvalueError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyProjectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pointlab
