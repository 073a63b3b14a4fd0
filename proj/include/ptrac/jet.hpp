#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ptrac/errors.hpp"

namespace ptrac {

using cplx = std::complex<double>;
using Point = Eigen::VectorXd;

inline constexpr int kMaxJetDim = 5;
inline constexpr int kMaxJetOrder = 4;

/// Enumeration of the multi-indices of total degree <= order in `dim`
/// variables (graded lexicographic), with a dense product table.  One
/// instance is built lazily per (dim, order) pair and shared.
class MultiIndexSet {
 public:
  static const MultiIndexSet& get(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(idx_.size()); }

  std::span<const int> exponents(int i) const { return {idx_[i].data(), static_cast<size_t>(dim_)}; }
  int degree(int i) const { return deg_[i]; }

  /// Position of a multi-index, or -1 if its degree exceeds `order`.
  int rank(std::span<const int> exps) const;

  /// Position of idx_[i] + idx_[j], or -1 if the sum leaves the set.
  int sum(int i, int j) const { return mul_[static_cast<size_t>(i) * idx_.size() + j]; }

 private:
  MultiIndexSet(int dim, int order);
  int dim_, order_;
  std::vector<std::array<int, kMaxJetDim>> idx_;
  std::vector<int> deg_;
  std::vector<int> mul_;
};

/// Truncated multivariate Taylor expansion of a function at a chart point:
/// coeffs[I] = (d^I f)(p) / I!.  Immutable in spirit; all operations below
/// return fresh jets and never read coefficients above `order`.
class Jet {
 public:
  Jet() : Jet(1, 0) {}
  Jet(int dim, int order);

  static Jet constant(int dim, int order, cplx v);
  /// Jet of the coordinate function x_axis at a point with x_axis = value.
  static Jet coordinate(int dim, int order, int axis, double value);

  int dim() const { return dim_; }
  int order() const { return order_; }
  const MultiIndexSet& table() const { return MultiIndexSet::get(dim_, order_); }

  cplx value() const { return c_[0]; }
  cplx coeff(std::span<const int> exps) const;
  cplx coeff(std::initializer_list<int> exps) const { return coeff(std::span<const int>(exps.begin(), exps.size())); }
  const Eigen::VectorXcd& coeffs() const { return c_; }
  Eigen::VectorXcd& coeffs() { return c_; }

  /// Drop Taylor data above `new_order` (new_order <= order).
  Jet truncated(int new_order) const;

  double max_abs() const { return c_.size() ? c_.cwiseAbs().maxCoeff() : 0.0; }

  Jet operator-() const;
  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator*(const Jet& a, cplx s);
  friend Jet operator*(cplx s, const Jet& a) { return a * s; }
  friend Jet operator+(const Jet& a, cplx s);
  friend Jet operator+(cplx s, const Jet& a) { return a + s; }
  friend Jet operator-(const Jet& a, cplx s) { return a + (-s); }

 private:
  void check_match(const Jet& o) const;
  int dim_, order_;
  Eigen::VectorXcd c_;
};

/// Jet of the partial derivative along `axis`; order drops by one.
Jet partial(const Jet& a, int axis);

/// Faa-di-Bruno truncated composition: `series[k]` are the Taylor
/// coefficients f^(k)(g(p))/k! of a univariate f about the value of g.
Jet compose_univariate(std::span<const cplx> series, const Jet& g);

Jet reciprocal(const Jet& g);
Jet sqrt(const Jet& g);
Jet exp(const Jet& g);
Jet log(const Jet& g);
Jet sin(const Jet& g);
Jet cos(const Jet& g);
/// g^w for complex w (principal branch; g must avoid 0 unless w is a
/// small non-negative integer, for which the direct product is used).
Jet pow(const Jet& g, cplx w);

inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

}  // namespace ptrac
