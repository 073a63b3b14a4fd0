#pragma once

#include <stdexcept>
#include <string>

namespace ptrac {

/// Shape mismatch (dimension, order, degree, scale) between operands.
struct StructuralError : std::runtime_error {
  explicit StructuralError(const std::string& m) : std::runtime_error(m) {}
};

/// Evaluation at a point where the requested quantity is singular
/// (1/rho at rho = 0, sqrt at 0, point outside the chart domain, ...).
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& m) : std::runtime_error(m) {}
};

/// An operator composition asked for more derivatives than the jet carries.
struct OrderExhausted : std::runtime_error {
  explicit OrderExhausted(const std::string& m) : std::runtime_error(m) {}
};

/// Operation not available on this geometry (degenerate tractor metric, ...).
struct CapabilityError : std::runtime_error {
  explicit CapabilityError(const std::string& m) : std::runtime_error(m) {}
};

/// Frobenius recurrence hit a vanishing denominator at step k.
struct ResonanceError : std::runtime_error {
  ResonanceError(int k_, const std::string& m) : std::runtime_error(m), k(k_) {}
  int k;
};

/// The caller violated a stated precondition (non-closed input, excluded weight).
struct PreconditionError : std::runtime_error {
  explicit PreconditionError(const std::string& m) : std::runtime_error(m) {}
};

/// Numerical procedure failed (step-size underflow, ill-conditioned fit).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace ptrac
