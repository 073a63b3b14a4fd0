#pragma once

#include "ptrac/forms.hpp"

namespace ptrac {

/// Weighted cotractor k-form in the two-slot splitting of a declared scale:
/// mu has degree k-1, xi degree k, both of weight w + k.  Degrees outside
/// [0, n+1] denote the zero bundle (comps absent); operators propagate them.
struct TracJet {
  Point p;
  int n = 0;
  int k = 0;
  cplx w = 0.0;
  int scale = Geometry::kLC;
  FormJet mu, xi;  // ignored when the slot is absent (k==0 / k==n+1 / zero bundle)

  bool zero_bundle() const { return k < 0 || k > n + 1; }
  bool has_mu() const { return k >= 1 && !zero_bundle(); }
  bool has_xi() const { return k <= n && !zero_bundle(); }

  static TracJet make(const Point& p, int n, int k, cplx w, int scale, int order);
  int order() const;
  double max_abs() const;
  TracJet truncated(int order) const;

  TracJet operator-() const;
  TracJet& operator+=(const TracJet& o);
  TracJet& operator-=(const TracJet& o);
  friend TracJet operator+(TracJet a, const TracJet& b) { return a += b; }
  friend TracJet operator-(TracJet a, const TracJet& b) { return a -= b; }
  friend TracJet operator*(const Jet& s, TracJet a);
  friend TracJet operator*(cplx s, TracJet a);
};

using TracField = std::function<TracJet(const Point&, int order)>;

TracField trac_field(int n, int k, cplx w, int scale, std::vector<JetSpec> mu_comps,
                     std::vector<JetSpec> xi_comps);
TracField random_trac_field(std::mt19937_64& rng, int n, int k, cplx w, int scale, int deg = 3);
/// Wrap a density (k = 0) given by one scalar spec.
TracField density_field(int n, cplx w, int scale, JetSpec comp);

// --- scale handling -----------------------------------------------------------
/// Re-express F in `to_scale`: mu invariant, xi += Upsilon ^ mu, followed by
/// the weight-(w+k) re-trivialization of both slots.
TracJet transport(const Geometry& geom, const TracJet& F, int to_scale);

// --- algebra -------------------------------------------------------------------
TracJet tractor_wedge(const TracJet& F, const TracJet& G);
/// Tractor-metric pairing h(F,G) with the 1/k! normalization (computed in LC).
Jet h_pair(const Geometry& geom, const TracJet& F, const TracJet& G);
/// Positive tractor volume form (degree n+1, weight 0).
TracJet tractor_volume(const Geometry& geom, const Point& p, int order, int scale);
/// Scale tractor I = D sigma as a degree-1 cotractor of weight alpha-1.
TracJet scale_tractor(const Geometry& geom, const Point& p, int order, int scale);
/// Contraction of F with the H-raised tractor of a degree-1 cotractor U.
TracJet tractor_contract(const Geometry& geom, const TracJet& U, const TracJet& F);

// --- the exterior operators -----------------------------------------------------
/// Tractor exterior derivative (degree +1, weight -1).
TracJet d_ext(const Geometry& geom, const TracJet& F);
/// Tractor Hodge star (degree -> n+1-k, weight preserved); any scale.
TracJet tractor_hodge(const Geometry& geom, const TracJet& F);
/// Codifferential as the signed composite star d star (degree -1, weight -1).
TracJet tractor_codiff(const Geometry& geom, const TracJet& F);
/// Closed-form codifferential in the LC scale (general metrisability terms kept).
TracJet tractor_codiff_closed(const Geometry& geom, const TracJet& F);
/// I ^ F (degree +1, weight +1).
TracJet scale_wedge(const Geometry& geom, const TracJet& F);
/// Signed composite star (I ^ .) star (degree -1, weight +1).
TracJet scale_hook(const Geometry& geom, const TracJet& F);
/// -I . F via the tractor contraction (binding definition of the hook).
TracJet scale_hook_contract(const Geometry& geom, const TracJet& F);
/// Tractor Laplacian H^{AB} D_A D_B (weight -2); assembled in any scale.
TracJet tractor_laplacian(const Geometry& geom, const TracJet& F);
/// Closed form of {D, D*} in the LC scale (the non-normal terms kept).
TracJet anticomm_d_codiff_closed(const Geometry& geom, const TracJet& F);
/// Weitzenbock curvature term  k(k+1) H^{AB} Omega_[A|B|^C_{A1} F_{|C|A2..]},
/// evaluated from the supplied Weyl tensor.
TracJet weyl_curvature_term(const Geometry& geom, const TracJet& F, const JetTen4& weyl);

// --- boundary calculus ----------------------------------------------------------
/// Multiplication by the defining density sigma (weight +alpha).
TracJet sigma_mult(const Geometry& geom, const TracJet& F);
/// ytilde = (1/f) {D, D*}  (weight -2); de Sitter only.
TracJet ytilde(const Geometry& geom, const TracJet& F);
/// y = -(1/f) Laplacian; equals ytilde on de Sitter by the Weitzenbock identity.
TracJet y_op(const Geometry& geom, const TracJet& F);
/// Apply h = weight + (n+1)/2.
TracJet h_op(const TracJet& F);

/// Residual of [x, Laplacian] F + (f/alpha)(2w + d + alpha) F.
TracJet commutator_x_laplacian_residual(const Geometry& geom, const TracField& F, const Point& p,
                                        int order);

/// Potential A with d_ext A = F for a closed F of weight w, w + k != 0.
TracJet potential_recover(const Geometry& geom, const TracField& F, const Point& p, int order,
                          double closed_tol = 1e-8);

struct ProcaReport {
  cplx m2;
  double gauge_residual;      // |delta xi| on the harmonic data
  double proca_slot_residual; // bottom slot vs delta d xi - (f/sigma/4) m^2 xi
  double top_slot_residual;   // top slot vs delta d mu - (w+k) delta xi
};
ProcaReport proca_system_check(const Geometry& geom, const FormField& phi, cplx w, const Point& p);

struct GaugedBoxReport {
  double identity_residual;   // printed wave-identity residual
  double xi_norm_residual;    // xi~^a xi~_a - alpha^2
  double xi_div_residual;     // grad^a xi~_a + alpha (n-1) rho
};
/// Weight-1 density wave operator on the Minkowski cone built from the
/// rho-gauged connection pair; checks it reproduces (box + m^2) - im(n-1)rho.
GaugedBoxReport gauged_box_minkowski(const Geometry& geom, const ScalarField& tau, double m,
                                     const Point& p);

/// Named operator with its weight/degree bookkeeping, for sweep drivers.
struct TractorOperator {
  std::string name;
  cplx dw;
  int dk;
  int jet_cost;
  std::function<TracJet(const Geometry&, const TracJet&)> apply;
};
std::vector<TractorOperator> standard_operators(int alpha, bool with_hodge_family);

double rel_residual(const TracJet& diff, double ref_norm);

}  // namespace ptrac
