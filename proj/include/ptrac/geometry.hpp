#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ptrac/jet_spec.hpp"
#include "ptrac/jet_tensor.hpp"

namespace ptrac {

enum class Model { de_sitter, minkowski_cone, generic };

struct Domain {
  Eigen::VectorXd lo, hi;          // validity box (jets regular inside)
  Eigen::VectorXd sample_lo, sample_hi;  // tighter box used for random sweeps
  bool contains(const Point& p) const {
    for (int i = 0; i < p.size(); ++i)
      if (p[i] < lo[i] || p[i] > hi[i]) return false;
    return true;
  }
};

/// Pointwise curvature of a chart connection, all entries jets.
/// Index conventions: riemann(a,b,c,d) = R_ab^c_d with R_ab^c_d X^d = 2 grad_[a grad_b] X^c,
/// ricci(a,b) = riemann(c,a,c,b), cotton(a,b,c) = 2 grad_[a P_b]c.
struct CurvaturePack {
  JetTen4 riemann, weyl;
  JetMat ricci, schouten, beta;
  std::optional<JetTen3> cotton;
};

/// Boundary-defining data trivialized in a declared scale.
struct BoundaryJets {
  Jet sigma;     // defining density component (weight alpha)
  JetMat zeta;   // metrisability solution zeta^{ab} (weight -2)
  JetMat zeta_lo;
  JetVec T;      // -grad_a zeta^{ab}/(n+1); middle slot of H
  Jet hxx;       // bottom slot of H
  Jet i2;        // I^2 = H(I,I), I = D sigma
  Jet f;         // sigma^{-1} I^2
  int eps = 0;   // sgn(sigma^{-1} I^2); 0 when degenerate
  int sgn_det_zeta = 0;
};

struct GenericMetricSpec {
  int dim = 0;
  std::vector<JetSpec> comps;  // row-major n*n, must be symmetric
  Eigen::VectorXd lo, hi;
};

/// A chart-based model geometry: jet-evaluable metric, its Levi-Civita data,
/// a registry of special scales, and the boundary-calculus scalars.
/// Immutable once scales are registered; evaluation is pure.
class Geometry {
 public:
  static constexpr int kLC = 0;

  static Geometry de_sitter(int d);
  static Geometry minkowski_cone(int n);
  static Geometry generic(GenericMetricSpec spec);

  Model model() const { return model_; }
  int dim() const { return n_; }
  int alpha() const { return alpha_; }
  int sphere_dim() const { return model_ == Model::de_sitter ? n_ - 1 : 0; }
  const std::vector<int>& signature() const { return signature_; }
  const Domain& domain() const { return domain_; }
  Point sample(std::mt19937_64& rng) const;

  // --- scales -------------------------------------------------------------
  /// Registers the special scale whose weight-1 unit is exp(log_gauge) times
  /// the Levi-Civita unit; returns its id.  Not thread safe; call at setup.
  int add_scale(const std::string& name, ScalarField log_gauge);
  int scale_S() const;  // boundary-regular scale (models with a boundary)
  int num_scales() const { return static_cast<int>(scales_.size()); }
  const std::string& scale_name(int s) const { return scales_[s].name; }
  /// Change-of-scale one-form from `from` to `to` (chart components).
  JetVec upsilon(const Point& p, int order, int from, int to) const;
  /// Multiplier applied to weight-w components when re-trivializing from->to.
  Jet gauge_factor(const Point& p, int order, int from, int to, cplx w) const;

  // --- chart data ---------------------------------------------------------
  JetMat metric(const Point& p, int order) const;
  JetMat metric_inv(const Point& p, int order) const;
  JetTen3 christoffel(const Point& p, int order, int scale = kLC) const;
  CurvaturePack curvature(const Point& p, int order, int scale = kLC, bool with_cotton = false) const;
  BoundaryJets boundary(const Point& p, int order, int scale = kLC) const;

  /// Round-sphere block (de Sitter only): h_ij on the angle coordinates,
  /// embedded as an n x n jet matrix with zero rho row/column.
  JetMat sphere_metric(const Point& p, int order) const;
  Jet sphere_laplacian(const ScalarField& phi, const Point& p, int order) const;

  // --- model formulas -----------------------------------------------------
  Jet box_rho(const Point& p) const;           // g^{ab} grad_a grad_b rho from jets
  double box_rho_closed(const Point& p) const; // appendix closed form
  Jet grad_rho_sq(const Point& p) const;       // |grad rho|^2 (Minkowski check)
  /// Scalar wave operator of the boundary-regular connection on de Sitter,
  /// assembled from the shifted connection; order-2 jets of phi consumed.
  Jet hat_box_scalar(const ScalarField& phi, const Point& p) const;
  double hat_box_scalar_closed(const ScalarField& phi, const Point& p) const;

  // --- identity residuals -------------------------------------------------
  /// Metrisability equation residual of zeta in the given scale.
  JetTen3 me_residual(const Point& p, int scale = kLC) const;
  /// Prolonged metrisability system residual (three slots).
  struct Me2Residual {
    JetTen3 ww;  // (c,a,b)
    JetMat xw;   // (c,b)
    JetVec xx;   // (c)
  };
  Me2Residual me2_residual(const Point& p, int scale = kLC) const;
  /// Second-Bianchi consequence: grad_a W_cd^a_f - (n-2) Y_cdf + 3 grad_[c beta_df].
  JetTen3 bianchi_weyl_residual(const Point& p) const;

 private:
  Geometry() = default;
  JetMat metric_jets(const Point& p, int order) const;

  Model model_ = Model::generic;
  int n_ = 0;
  int alpha_ = 2;
  std::vector<int> signature_;
  Domain domain_;
  GenericMetricSpec gspec_;

  struct ScaleInfo {
    std::string name;
    ScalarField log_gauge;  // relative to LC; empty for LC itself
  };
  std::vector<ScaleInfo> scales_;
  int scale_S_ = -1;
};

/// Projective change of the Schouten pair under grad -> grad + Upsilon.
/// Returns {P - grad Upsilon + Upsilon Upsilon, beta + 2 grad_[a Upsilon_b]};
/// derivatives taken with the connection P belongs to.
std::pair<JetMat, JetMat> schouten_transform(const Geometry& geom, const Point& p,
                                             const JetMat& P, const JetMat& beta,
                                             const JetVec& upsilon, int scale = Geometry::kLC);

/// Covariant derivative of weight-w tensor components (LC trivialization)
/// under the shifted connection grad + Upsilon: tensor indices see the
/// shifted Christoffels, the density factor contributes +w Upsilon_a.
/// `up` gives the number of contravariant indices (leading), `down` covariant.
std::vector<Jet> shifted_cov_deriv(const Geometry& geom, const Point& p, std::vector<Jet> comps,
                                   int up, int down, cplx w, const JetVec& upsilon);

}  // namespace ptrac
