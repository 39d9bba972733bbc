#pragma once

#include <stdexcept>
#include <string>

namespace torusppca {

// Invalid arguments are reported with std::invalid_argument. The types below
// cover failures that depend on the numbers rather than on the call shape.

/// A matrix that must be positive definite (or invertible) is not.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A retained eigenvalue does not exceed the noise floor, so the closed-form
/// PPCA loading for that component would be imaginary or zero.
class DegenerateComponentError : public NumericalError {
 public:
  DegenerateComponentError(int component, double eigenvalue, double noise_floor);

  /// One-based index of the offending component.
  int component() const noexcept { return component_; }

 private:
  int component_;
};

/// A winding-lattice enumeration would exceed the configured term budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace torusppca
