#pragma once

#include "ptrac/comb.hpp"
#include "ptrac/geometry.hpp"

namespace ptrac {

/// Antisymmetric covariant k-tensor of projective weight w at a point,
/// components trivialized in a declared scale and stored as jets over the
/// strictly increasing index tuples (antisymmetry implicit).
struct FormJet {
  Point p;
  int n = 0;
  int k = 0;
  cplx w = 0.0;
  int scale = Geometry::kLC;
  std::vector<Jet> comp;  // size C(n,k)

  static FormJet zero(const Point& p, int n, int k, cplx w, int scale, int order);
  int order() const { return comp.empty() ? 0 : comp[0].order(); }
  Jet& at(std::span<const int> tuple);
  const Jet& at(std::span<const int> tuple) const;
  double max_abs() const { return ptrac::max_abs(comp); }
  FormJet truncated(int order) const;

  FormJet operator-() const;
  FormJet& operator+=(const FormJet& o);
  FormJet& operator-=(const FormJet& o);
  friend FormJet operator+(FormJet a, const FormJet& b) { return a += b; }
  friend FormJet operator-(FormJet a, const FormJet& b) { return a -= b; }
  friend FormJet operator*(const Jet& s, FormJet a);
  friend FormJet operator*(cplx s, FormJet a);
};

/// Weighted vector field value (contravariant), same storage discipline.
struct VecJet {
  Point p;
  int n = 0;
  cplx w = 0.0;
  int scale = Geometry::kLC;
  std::vector<Jet> comp;  // size n
};

using FormField = std::function<FormJet(const Point&, int order)>;

/// Build a form field whose components come from expression trees
/// (components listed over increasing tuples).
FormField form_field(int n, int k, cplx w, int scale, std::vector<JetSpec> comps);
FormField random_form_field(std::mt19937_64& rng, int n, int k, cplx w, int scale, int deg = 3);

// --- pointwise algebra ------------------------------------------------------
FormJet wedge(const FormJet& a, const FormJet& b);
/// zeta-pairing <a,b> with the 1/k! normalization (weight sum - 2k).
Jet zeta_pair(const Geometry& geom, const FormJet& a, const FormJet& b);
/// Positive volume form of the metrisability solution, a weight-n n-form.
FormJet volume_form(const Geometry& geom, const Point& p, int order, int scale);
/// Base Hodge star: (Lambda^k)(w) -> (Lambda^{n-k})(w + n - 2k),
/// defined by  alpha ^ (star beta) = <alpha, beta> vol.
FormJet hodge_star_base(const Geometry& geom, const FormJet& a);
/// Interior product X . a (degree k-1, weight sum).
FormJet contract(const VecJet& X, const FormJet& a);
/// Index raising/lowering with zeta (weight shifts by -/+ 2).
VecJet sharp(const Geometry& geom, const FormJet& one_form);
FormJet flat(const Geometry& geom, const VecJet& v);

// --- first order ops ---------------------------------------------------------
/// Covariant exterior derivative on weighted components in a special scale.
FormJet cov_ext_d(const Geometry& geom, const FormJet& a);
/// Codifferential  (delta a)_{a2..ak} = -zeta^{bc} grad_b a_{c a2..ak}.
FormJet codifferential_base(const Geometry& geom, const FormJet& a);
/// Covariant derivative as a (0,1)-tensor of forms: slot d gives grad_d a.
std::vector<FormJet> cov_deriv_form(const Geometry& geom, const FormJet& a);
/// Lie derivative along a weighted vector field:
/// (L_X a)_{a1..ak} = X^b grad_b a_{a1..ak} + k (grad_[a1 X^b) a_{|b| a2..ak]}.
FormJet lie_derivative_weighted(const Geometry& geom, const VecJet& X, const FormJet& a);

// --- identities ---------------------------------------------------------------
/// {d,delta} a + zeta^{bc} grad_b grad_c a  minus the two curvature sums.
FormJet base_weitzenbock_residual(const Geometry& geom, const FormJet& a);

/// max over components and jet coefficients, relative to 1 + reference norm.
double rel_residual(const FormJet& diff, double ref_norm);

}  // namespace ptrac
