#include "ptrac/tractor.hpp"

namespace ptrac {

namespace {

void check_compat(const TracJet& a, const TracJet& b) {
  if (a.n != b.n || a.k != b.k || a.scale != b.scale)
    throw StructuralError("tractor form shape/scale mismatch");
}

/// xi with one index pinned: (k-1)-form  A -> xi_{(b, A)}.
FormJet pin_first(const FormJet& xi, int b, int order) {
  FormJet out = FormJet::zero(xi.p, xi.n, xi.k - 1, xi.w, xi.scale, order);
  const auto& tj = combinations(xi.n, xi.k - 1);
  std::vector<int> merged;
  for (size_t j = 0; j < tj.size(); ++j) {
    int one[1] = {b};
    int sign = merge_sign(std::span<const int>(one, 1), tj[j], merged);
    if (sign == 0) continue;
    out.comp[j] = double(sign) * xi.comp[comb_rank(xi.n, merged)].truncated(order);
  }
  return out;
}

/// k P_{b [a1} mu_{a2..ak]} as a k-form over the sorted tuple C:
/// sum_i (-1)^{i-1} P_{b c_i} mu_{C \ c_i}.
FormJet schouten_pattern(const JetMat& P, int b, const FormJet& mu, int order) {
  const int k = mu.k + 1;
  FormJet out = FormJet::zero(mu.p, mu.n, k, mu.w, mu.scale, order);
  const auto& tc = combinations(mu.n, k);
  std::vector<int> rest(k - 1);
  for (size_t c = 0; c < tc.size(); ++c) {
    Jet v(mu.n, order);
    for (int i = 0; i < k; ++i) {
      int r = 0;
      for (int t = 0; t < k; ++t)
        if (t != i) rest[r++] = tc[c][t];
      double sg = (i % 2 == 0) ? 1.0 : -1.0;
      v += sg * (P(b, tc[c][i]).truncated(order) *
                 mu.comp[comb_rank(mu.n, std::span<const int>(rest.data(), k - 1))].truncated(order));
    }
    out.comp[c] = v;
  }
  return out;
}

struct TracGrad {
  std::vector<FormJet> mu, xi;  // slot pairs of grad_b F, index b
};

/// Coupled tractor-connection derivative in the splitting of F.scale:
/// grad_b F = ( grad_b mu - xi_{b.} , grad_b xi + k P_{b[a1} mu_{..]} ).
TracGrad trac_grad(const Geometry& geom, const TracJet& F, const JetMat& P) {
  const int n = F.n, k = F.k;
  const int order = F.order() - 1;
  TracGrad g;
  std::vector<FormJet> dmu, dxi;
  if (F.has_mu()) dmu = cov_deriv_form(geom, F.mu);
  if (F.has_xi()) dxi = cov_deriv_form(geom, F.xi);
  for (int b = 0; b < n; ++b) {
    if (F.has_mu()) {
      FormJet m = dmu[b];
      if (F.has_xi()) m -= pin_first(F.xi, b, order);
      g.mu.push_back(std::move(m));
    } else if (F.has_xi() && k >= 1) {
      g.mu.push_back(-pin_first(F.xi, b, order));
    }
    if (F.has_xi()) {
      FormJet x = dxi[b];
      if (F.has_mu() && k >= 1) x += double(k) * schouten_pattern(P, b, F.mu.truncated(order), order);
      g.xi.push_back(std::move(x));
    }
  }
  return g;
}

Jet trace_zeta_schouten(int order, const JetMat& zeta, const JetMat& P) {
  Jet tr(zeta.v[0].dim(), order);
  for (int a = 0; a < zeta.n; ++a)
    for (int b = 0; b < zeta.n; ++b) tr += zeta(a, b).truncated(order) * P(a, b).truncated(order);
  return tr;
}

JetMat zeta_scale(const Geometry& geom, const Point& p, int order, int scale) {
  JetMat z = geom.metric_inv(p, order);
  Jet f = geom.gauge_factor(p, order, Geometry::kLC, scale, -2.0);
  for (auto& j : z.v) j = j * f;
  return z;
}

}  // namespace

TracJet TracJet::make(const Point& p, int n, int k, cplx w, int scale, int order) {
  TracJet t;
  t.p = p;
  t.n = n;
  t.k = k;
  t.w = w;
  t.scale = scale;
  if (t.has_mu()) t.mu = FormJet::zero(p, n, k - 1, w + double(k), scale, order);
  if (t.has_xi()) t.xi = FormJet::zero(p, n, k, w + double(k), scale, order);
  return t;
}

int TracJet::order() const {
  if (has_xi()) return xi.order();
  if (has_mu()) return mu.order();
  return 0;
}

double TracJet::max_abs() const {
  double r = 0;
  if (has_mu()) r = std::max(r, mu.max_abs());
  if (has_xi()) r = std::max(r, xi.max_abs());
  return r;
}

TracJet TracJet::truncated(int order) const {
  TracJet out = *this;
  if (has_mu()) out.mu = mu.truncated(order);
  if (has_xi()) out.xi = xi.truncated(order);
  return out;
}

TracJet TracJet::operator-() const {
  TracJet out = *this;
  if (has_mu()) out.mu = -mu;
  if (has_xi()) out.xi = -xi;
  return out;
}

TracJet& TracJet::operator+=(const TracJet& o) {
  if (o.zero_bundle()) return *this;
  if (zero_bundle()) {
    *this = o;
    return *this;
  }
  check_compat(*this, o);
  if (has_mu()) mu += o.mu;
  if (has_xi()) xi += o.xi;
  return *this;
}

TracJet& TracJet::operator-=(const TracJet& o) { return *this += -o; }

TracJet operator*(const Jet& s, TracJet a) {
  if (a.has_mu()) a.mu = s * a.mu;
  if (a.has_xi()) a.xi = s * a.xi;
  return a;
}

TracJet operator*(cplx s, TracJet a) {
  if (a.has_mu()) a.mu = s * a.mu;
  if (a.has_xi()) a.xi = s * a.xi;
  return a;
}

TracField trac_field(int n, int k, cplx w, int scale, std::vector<JetSpec> mu_comps,
                     std::vector<JetSpec> xi_comps) {
  FormField fmu, fxi;
  if (k >= 1) fmu = form_field(n, k - 1, w + double(k), scale, std::move(mu_comps));
  if (k <= n) fxi = form_field(n, k, w + double(k), scale, std::move(xi_comps));
  return [=](const Point& p, int order) {
    TracJet t = TracJet::make(p, n, k, w, scale, order);
    if (t.has_mu()) t.mu = fmu(p, order);
    if (t.has_xi()) t.xi = fxi(p, order);
    return t;
  };
}

TracField random_trac_field(std::mt19937_64& rng, int n, int k, cplx w, int scale, int deg) {
  std::vector<JetSpec> mus, xis;
  if (k >= 1)
    for (long i = 0; i < binom(n, k - 1); ++i) mus.push_back(random_poly_trig(rng, n, deg, 3));
  if (k <= n)
    for (long i = 0; i < binom(n, k); ++i) xis.push_back(random_poly_trig(rng, n, deg, 3));
  return trac_field(n, k, w, scale, std::move(mus), std::move(xis));
}

TracField density_field(int n, cplx w, int scale, JetSpec comp) {
  return trac_field(n, 0, w, scale, {}, {std::move(comp)});
}

TracJet transport(const Geometry& geom, const TracJet& F, int to_scale) {
  if (F.zero_bundle() || F.scale == to_scale) {
    TracJet out = F;
    out.scale = to_scale;
    return out;
  }
  const int order = F.order();
  Jet gauge = geom.gauge_factor(F.p, order, F.scale, to_scale, F.w + double(F.k));
  TracJet out = TracJet::make(F.p, F.n, F.k, F.w, to_scale, order);
  if (F.has_mu()) {
    out.mu = gauge * F.mu;
    out.mu.scale = to_scale;
  }
  if (F.has_xi()) {
    FormJet xi = F.xi;
    if (F.has_mu() && F.k <= F.n) {
      JetVec ups = geom.upsilon(F.p, order, F.scale, to_scale);
      FormJet upsf = FormJet::zero(F.p, F.n, 1, 0.0, F.scale, order);
      upsf.comp = ups.v;
      xi += wedge(upsf, F.mu);
    }
    out.xi = gauge * xi;
    out.xi.scale = to_scale;
  }
  return out;
}

TracJet tractor_wedge(const TracJet& F, const TracJet& G) {
  if (F.n != G.n || F.scale != G.scale) throw StructuralError("tractor wedge: incompatible");
  if (F.zero_bundle() || G.zero_bundle())
    return TracJet{F.p, F.n, std::max(F.k + G.k, F.n + 2), F.w + G.w, F.scale, {}, {}};
  const int k = F.k, l = G.k, n = F.n;
  if (k + l > n + 1) throw StructuralError("tractor wedge: degree overflow");
  const int order = std::min(F.order(), G.order());
  TracJet out = TracJet::make(F.p, n, k + l, F.w + G.w, F.scale, order);
  const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
  if (out.has_mu()) {
    if (F.has_mu() && G.has_xi()) out.mu += wedge(F.mu.truncated(order), G.xi.truncated(order));
    if (F.has_xi() && G.has_mu()) out.mu += sgn * wedge(F.xi.truncated(order), G.mu.truncated(order));
  }
  if (out.has_xi() && F.has_xi() && G.has_xi())
    out.xi = wedge(F.xi.truncated(order), G.xi.truncated(order));
  return out;
}

Jet h_pair(const Geometry& geom, const TracJet& F0, const TracJet& G0) {
  TracJet F = transport(geom, F0, Geometry::kLC);
  TracJet G = transport(geom, G0, Geometry::kLC);
  if (F.k != G.k) throw StructuralError("h pairing needs equal degrees");
  const int order = std::min(F.order(), G.order());
  Jet out(F.n, order);
  if (F.has_xi()) out += zeta_pair(geom, F.xi.truncated(order), G.xi.truncated(order));
  if (F.has_mu()) {
    Jet hxx = geom.boundary(F.p, order, Geometry::kLC).hxx;
    out += hxx * zeta_pair(geom, F.mu.truncated(order), G.mu.truncated(order));
  }
  return out;
}

TracJet tractor_volume(const Geometry& geom, const Point& p, int order, int scale) {
  BoundaryJets b = geom.boundary(p, order, scale);
  if (b.eps == 0) throw CapabilityError("tractor volume needs nondegenerate H");
  Jet c1 = 2.0 * sqrt(b.sigma) * reciprocal(sqrt(double(b.eps) * b.f));
  TracJet out = TracJet::make(p, geom.dim(), geom.dim() + 1, 0.0, scale, order);
  out.mu = c1 * volume_form(geom, p, order, scale);
  out.mu.w = double(geom.dim() + 1);
  return out;
}

TracJet scale_tractor(const Geometry& geom, const Point& p, int order, int scale) {
  const int n = geom.dim();
  const double alpha = geom.alpha();
  Jet sig = geom.gauge_factor(p, order + 1, Geometry::kLC, scale, alpha);
  TracJet out = TracJet::make(p, n, 1, alpha - 1.0, scale, order);
  out.mu.comp[0] = alpha * sig.truncated(order);
  for (int a = 0; a < n; ++a) out.xi.comp[a] = partial(sig, a);
  return out;
}

TracJet tractor_contract(const Geometry& geom, const TracJet& U, const TracJet& F) {
  if (U.k != 1) throw StructuralError("tractor contraction expects a degree-1 cotractor");
  if (F.zero_bundle() || F.k == 0) return TracJet{F.p, F.n, -1, F.w + U.w, F.scale, {}, {}};
  const int n = F.n;
  const int order = std::min(F.order(), U.order());
  BoundaryJets b = geom.boundary(F.p, order, F.scale);
  // raise U with H: v^a = zeta^{ab} u_b + T^a u,  vX = T^b u_b + hxx u
  const Jet& u = U.mu.comp[0];
  VecJet v;
  v.p = F.p;
  v.n = n;
  v.w = U.w - 1.0;
  v.scale = F.scale;
  v.comp.assign(n, Jet(n, order));
  Jet vX(n, order);
  for (int a = 0; a < n; ++a) {
    Jet s = b.T(a).truncated(order) * u.truncated(order);
    for (int c = 0; c < n; ++c) s += b.zeta(a, c).truncated(order) * U.xi.comp[c].truncated(order);
    v.comp[a] = s;
    vX += b.T(a).truncated(order) * U.xi.comp[a].truncated(order);
  }
  vX += b.hxx.truncated(order) * u.truncated(order);

  TracJet out = TracJet::make(F.p, n, F.k - 1, F.w + U.w, F.scale, order);
  if (out.has_mu() && F.has_mu()) out.mu = -contract(v, F.mu.truncated(order));
  if (out.has_xi()) {
    if (F.has_mu()) out.xi += vX * F.mu.truncated(order);
    if (F.has_xi()) out.xi += contract(v, F.xi.truncated(order));
  }
  // slot weights carried by the tractor header, not the raw contraction tags
  if (out.has_mu()) out.mu.w = out.w + double(out.k);
  if (out.has_xi()) out.xi.w = out.w + double(out.k);
  return out;
}

TracJet d_ext(const Geometry& geom, const TracJet& F) {
  if (F.zero_bundle() || F.k == F.n + 1)
    return TracJet{F.p, F.n, F.k + 1, F.w - 1.0, F.scale, {}, {}};
  const int n = F.n, k = F.k;
  const int order = F.order() - 1;
  if (F.order() < 1) throw OrderExhausted("tractor exterior derivative needs one derivative");
  TracJet out = TracJet::make(F.p, n, k + 1, F.w - 1.0, F.scale, order);
  // top slot: (w + k) xi - d mu
  out.mu = (F.w + double(k)) * F.xi.truncated(order);
  if (F.has_mu()) out.mu -= cov_ext_d(geom, F.mu);
  // bottom slot: d xi + (k+1)!/(k-1)! P_[a1 a2 mu_..] = d xi + 2 (P_anti ^ mu)
  if (out.has_xi()) {
    out.xi = cov_ext_d(geom, F.xi);
    if (F.has_mu()) {
      JetMat P = geom.curvature(F.p, order, F.scale).schouten;
      FormJet panti = FormJet::zero(F.p, n, 2, 0.0, F.scale, order);
      const auto& t2 = combinations(n, 2);
      bool nonzero = false;
      for (size_t i = 0; i < t2.size(); ++i) {
        panti.comp[i] = 0.5 * (P(t2[i][0], t2[i][1]) - P(t2[i][1], t2[i][0]));
        nonzero = nonzero || panti.comp[i].max_abs() > 0;
      }
      if (nonzero) out.xi += 2.0 * wedge(panti, F.mu.truncated(order));
    }
  }
  // fix slot weight tags (wedge/d keep component weights, header is binding)
  out.mu.w = out.w + double(out.k);
  if (out.has_xi()) out.xi.w = out.w + double(out.k);
  return out;
}

TracJet tractor_hodge(const Geometry& geom, const TracJet& F) {
  if (geom.model() == Model::minkowski_cone)
    throw CapabilityError("tractor Hodge star needs nondegenerate H");
  if (F.zero_bundle()) return TracJet{F.p, F.n, F.n + 1 - F.k, F.w, F.scale, {}, {}};
  const int n = F.n, k = F.k;
  const int order = F.order();
  BoundaryJets b = geom.boundary(F.p, order, F.scale);
  if (b.eps == 0) throw CapabilityError("tractor Hodge star: degenerate metrisability scalar");
  Jet rabs = reciprocal(sqrt(double(b.eps) * b.f));
  Jet c1 = 2.0 * sqrt(b.sigma) * rabs;
  Jet c2 = 0.5 * b.f * reciprocal(sqrt(b.sigma)) * rabs;
  const double sgn = (k % 2 == 0) ? 1.0 : -1.0;

  VecJet T;
  T.p = F.p;
  T.n = n;
  T.w = -2.0;
  T.scale = F.scale;
  T.comp = b.T.v;
  FormJet Tflat = flat(geom, T);

  TracJet out = TracJet::make(F.p, n, n + 1 - k, F.w, F.scale, order);
  std::optional<FormJet> star_xi, star_mu, t_hook_star_mu;
  if (F.has_xi()) star_xi = hodge_star_base(geom, F.xi.truncated(order));
  if (F.has_mu()) {
    star_mu = hodge_star_base(geom, F.mu.truncated(order));
    if (star_mu->k >= 1) t_hook_star_mu = contract(T, *star_mu);
  }
  if (out.has_mu()) {
    if (star_xi) out.mu += sgn * (c1 * *star_xi);
    if (t_hook_star_mu) out.mu += c1 * *t_hook_star_mu;
  }
  if (out.has_xi()) {
    if (star_mu) out.xi += c2 * *star_mu;
    if (star_xi && star_xi->k + 1 <= n) out.xi -= sgn * (c1 * wedge(Tflat, *star_xi));
    if (t_hook_star_mu && t_hook_star_mu->k + 1 <= n)
      out.xi -= c1 * wedge(Tflat, *t_hook_star_mu);
  }
  if (out.has_mu()) out.mu.w = out.w + double(out.k);
  if (out.has_xi()) out.xi.w = out.w + double(out.k);
  return out;
}

TracJet tractor_codiff(const Geometry& geom, const TracJet& F) {
  if (F.zero_bundle() || F.k == 0) return TracJet{F.p, F.n, F.k - 1, F.w - 1.0, F.scale, {}, {}};
  const int n = F.n, k = F.k;
  BoundaryJets b = geom.boundary(F.p, 0, F.scale);
  double sgn = (((n + 1) * (k - 1) + 1) % 2 == 0) ? 1.0 : -1.0;
  sgn *= b.sgn_det_zeta * b.eps;
  TracJet out = tractor_hodge(geom, d_ext(geom, tractor_hodge(geom, F)));
  return sgn * out;
}

TracJet tractor_codiff_closed(const Geometry& geom, const TracJet& F) {
  if (F.scale != Geometry::kLC)
    throw PreconditionError("closed-form codifferential is stated in the LC scale");
  if (F.zero_bundle() || F.k == 0) return TracJet{F.p, F.n, F.k - 1, F.w - 1.0, F.scale, {}, {}};
  const int n = F.n, k = F.k;
  const int order = F.order() - 1;
  BoundaryJets b = geom.boundary(F.p, order + 1, F.scale);
  TracJet out = TracJet::make(F.p, n, k - 1, F.w - 1.0, F.scale, order);
  // (f')# = zeta^{ab} grad_b f, a weight -2 vector; vanishes for normal solutions
  VecJet fsharp;
  fsharp.p = F.p;
  fsharp.n = n;
  fsharp.w = -2.0;
  fsharp.scale = F.scale;
  fsharp.comp.assign(n, Jet(n, order));
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c)
      fsharp.comp[a] += b.zeta(a, c).truncated(order) * partial(b.f, c);
  Jet inv2f = 0.5 * reciprocal(b.f.truncated(order));
  if (out.has_mu() && F.has_mu()) {
    out.mu = -codifferential_base(geom, F.mu);
    if (fsharp.comp[0].max_abs() + fsharp.comp[1].max_abs() > 0)
      out.mu += inv2f * contract(fsharp, F.mu.truncated(order));
  }
  if (out.has_xi()) {
    if (F.has_xi()) {
      out.xi += codifferential_base(geom, F.xi);
      if (max_abs(fsharp.comp) > 0) out.xi += inv2f * contract(fsharp, F.xi.truncated(order));
    }
    if (F.has_mu()) {
      Jet coef = (F.w + double(n + 1 - k)) * 0.25 * (b.f.truncated(order) * reciprocal(b.sigma.truncated(order)));
      out.xi -= coef * F.mu.truncated(order);
    }
  }
  if (out.has_mu()) out.mu.w = out.w + double(out.k);
  if (out.has_xi()) out.xi.w = out.w + double(out.k);
  return out;
}

TracJet scale_wedge(const Geometry& geom, const TracJet& F) {
  if (F.zero_bundle() || F.k == F.n + 1)
    return TracJet{F.p, F.n, F.k + 1, F.w + 1.0, F.scale, {}, {}};
  TracJet I = scale_tractor(geom, F.p, F.order(), F.scale);
  return tractor_wedge(I, F);
}

TracJet scale_hook(const Geometry& geom, const TracJet& F) {
  if (F.zero_bundle() || F.k == 0) return TracJet{F.p, F.n, F.k - 1, F.w + 1.0, F.scale, {}, {}};
  const int n = F.n, k = F.k;
  BoundaryJets b = geom.boundary(F.p, 0, F.scale);
  double sgn = (((k + 1) * (n + 1) + 1) % 2 == 0) ? 1.0 : -1.0;
  sgn *= b.eps * b.sgn_det_zeta;
  return sgn * tractor_hodge(geom, scale_wedge(geom, tractor_hodge(geom, F)));
}

TracJet scale_hook_contract(const Geometry& geom, const TracJet& F) {
  if (F.zero_bundle() || F.k == 0) return TracJet{F.p, F.n, F.k - 1, F.w + 1.0, F.scale, {}, {}};
  TracJet I = scale_tractor(geom, F.p, F.order(), F.scale);
  return -1.0 * tractor_contract(geom, I, F);
}

TracJet tractor_laplacian(const Geometry& geom, const TracJet& F) {
  if (F.zero_bundle()) return TracJet{F.p, F.n, F.k, F.w - 2.0, F.scale, {}, {}};
  const int n = F.n, k = F.k;
  const int order = F.order() - 2;
  if (order < 0) throw OrderExhausted("tractor Laplacian needs two derivatives");
  const JetMat P1 = geom.curvature(F.p, F.order() - 1, F.scale).schouten;
  const JetTen3 gam = geom.christoffel(F.p, order, F.scale);
  BoundaryJets b = geom.boundary(F.p, order, F.scale);
  JetMat zeta = zeta_scale(geom, F.p, order, F.scale);

  TracGrad g1 = trac_grad(geom, F, P1);
  JetMat Ptr(n, Jet(n, order));
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) Ptr(a, c) = P1(a, c).truncated(order);

  TracJet out = TracJet::make(F.p, n, k, F.w - 2.0, F.scale, order);
  // second pass per b: grad_a (grad_b F) with the tensor correction on b
  for (int bb = 0; bb < n; ++bb) {
    TracJet slot = TracJet::make(F.p, n, k, F.w, F.scale, order + 1);
    if (!g1.mu.empty()) slot.mu = g1.mu[bb];
    if (!g1.xi.empty() && slot.has_xi()) slot.xi = g1.xi[bb];
    TracGrad g2 = trac_grad(geom, slot, Ptr);
    for (int a = 0; a < n; ++a) {
      if (zeta(a, bb).max_abs() == 0.0) continue;
      std::optional<FormJet> hmu, hxi;
      if (!g2.mu.empty()) hmu = g2.mu[a];
      if (!g2.xi.empty()) hxi = g2.xi[a];
      for (int e = 0; e < n; ++e) {
        if (hmu && !g1.mu.empty()) *hmu -= gam(e, a, bb) * g1.mu[e].truncated(order);
        if (hxi && !g1.xi.empty()) *hxi -= gam(e, a, bb) * g1.xi[e].truncated(order);
      }
      if (hmu && out.has_mu()) out.mu += zeta(a, bb) * *hmu;
      if (hxi && out.has_xi()) out.xi += zeta(a, bb) * *hxi;
    }
  }

  // order-zero and first-order tail:
  //   w (w-1) hxx F + 2 (w-1) T^b grad_b F + w (zeta P) F
  Jet zp = trace_zeta_schouten(order, zeta, Ptr);
  Jet c0 = F.w * (F.w - 1.0) * b.hxx.truncated(order) + F.w * zp;
  if (out.has_mu()) out.mu += c0 * F.mu.truncated(order);
  if (out.has_xi()) out.xi += c0 * F.xi.truncated(order);
  for (int bb = 0; bb < n; ++bb) {
    Jet c1 = 2.0 * (F.w - 1.0) * b.T(bb).truncated(order);
    if (c1.max_abs() == 0.0) continue;
    if (out.has_mu() && !g1.mu.empty()) out.mu += c1 * g1.mu[bb].truncated(order);
    if (out.has_xi() && !g1.xi.empty()) out.xi += c1 * g1.xi[bb].truncated(order);
  }
  if (out.has_mu()) out.mu.w = out.w + double(out.k);
  if (out.has_xi()) out.xi.w = out.w + double(out.k);
  return out;
}

TracJet anticomm_d_codiff_closed(const Geometry& geom, const TracJet& F) {
  if (F.scale != Geometry::kLC)
    throw PreconditionError("closed-form anticommutator is stated in the LC scale");
  const int n = F.n, k = F.k;
  const int order = F.order() - 2;
  if (order < 0) throw OrderExhausted("anticommutator needs two derivatives");
  BoundaryJets b = geom.boundary(F.p, order + 1, F.scale);
  Jet fj = b.f.truncated(order + 1);
  Jet sigj = b.sigma.truncated(order + 1);
  JetMat zeta = zeta_scale(geom, F.p, order + 1, F.scale);

  // f-gradient objects (vanish for normal solutions)
  VecJet gradf;
  gradf.p = F.p;
  gradf.n = n;
  gradf.w = -2.0;
  gradf.scale = F.scale;
  gradf.comp.assign(n, Jet(n, order + 1));
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) gradf.comp[a] += zeta(a, c) * partial(b.f, c).truncated(order + 1);
  const bool f_varies = max_abs(gradf.comp) > 1e-13;
  VecJet X = gradf;  // f^{-1} grad f
  for (auto& j : X.comp) j = j * reciprocal(fj);
  FormJet fprime = FormJet::zero(F.p, n, 1, 0.0, F.scale, order);
  for (int a = 0; a < n; ++a) fprime.comp[a] = partial(b.f.truncated(order + 1), a);

  Jet fs = (fj * reciprocal(sigj)).truncated(order);
  TracJet out = TracJet::make(F.p, n, k, F.w - 2.0, F.scale, order);
  if (out.has_mu() && F.has_mu()) {
    FormJet acc = codifferential_base(geom, cov_ext_d(geom, F.mu)) +
                  cov_ext_d(geom, codifferential_base(geom, F.mu));
    if (F.has_xi()) acc -= 2.0 * codifferential_base(geom, F.xi);
    if (f_varies) {
      acc += (F.w + double(k) - 1.0) * (reciprocal(fj.truncated(order)) *
                                        contract(gradf, F.mu.truncated(order)).truncated(order));
      acc -= 0.5 * lie_derivative_weighted(geom, X, F.mu);
    }
    acc -= ((F.w + double(k) - 2.0) * (F.w + double(n + 1 - k)) * 0.25) * (fs * F.mu.truncated(order));
    out.mu = acc;
  }
  if (out.has_xi() && F.has_xi()) {
    FormJet acc = F.k <= n - 1
                      ? codifferential_base(geom, cov_ext_d(geom, F.xi))
                      : FormJet::zero(F.p, n, k, F.xi.w - 2.0, F.scale, order);
    if (F.k >= 1) acc += cov_ext_d(geom, codifferential_base(geom, F.xi));
    if (F.has_mu()) {
      acc -= 0.5 * (fs * cov_ext_d(geom, F.mu));
      if (f_varies)
        acc -= ((F.w + double(n + 1 - k)) * 0.25) *
               (reciprocal(sigj.truncated(order)) * wedge(fprime, F.mu.truncated(order)));
    }
    if (f_varies) acc += 0.5 * lie_derivative_weighted(geom, X, F.xi);
    acc -= ((F.w + double(k)) * (F.w - 1.0 + double(n - k)) * 0.25) * (fs * F.xi.truncated(order));
    out.xi = acc;
  }
  if (out.has_mu()) out.mu.w = out.w + double(out.k);
  if (out.has_xi()) out.xi.w = out.w + double(out.k);
  return out;
}

namespace {

/// The two Weyl curvature sums acting on one slot (k indices).
FormJet weyl_sums(const Geometry& geom, const FormJet& a, const JetTen4& weyl, const JetMat& zeta) {
  const int n = a.n, k = a.k;
  const int order = a.order();
  FormJet out = FormJet::zero(a.p, n, k, a.w, a.scale, order);
  const auto& tk = combinations(n, k);
  std::vector<int> tup(k);
  for (size_t i = 0; i < tk.size(); ++i) {
    Jet acc(n, order);
    for (int s = 0; s < k; ++s) {
      for (int c = 0; c < n; ++c) {
        Jet coeff(n, order);
        for (int aa = 0; aa < n; ++aa)
          for (int bb = 0; bb < n; ++bb)
            coeff += zeta(aa, bb).truncated(order) * weyl.v[((static_cast<size_t>(tk[i][s]) * n + aa) * n + c) * n + bb].truncated(order);
        std::copy(tk[i].begin(), tk[i].end(), tup.begin());
        tup[s] = c;
        int sign = sort_sign(std::span<int>(tup.data(), k));
        if (sign == 0) continue;
        acc += double(sign) * (coeff * a.comp[comb_rank(n, tup)].truncated(order));
      }
      for (int t = 0; t < k; ++t) {
        if (t == s) continue;
        for (int c = 0; c < n; ++c)
          for (int bb = 0; bb < n; ++bb) {
            Jet coeff(n, order);
            for (int aa = 0; aa < n; ++aa)
              coeff += zeta(aa, bb).truncated(order) *
                       weyl.v[((static_cast<size_t>(tk[i][s]) * n + aa) * n + c) * n + tk[i][t]].truncated(order);
            std::copy(tk[i].begin(), tk[i].end(), tup.begin());
            tup[t] = c;
            tup[s] = bb;
            int sign = sort_sign(std::span<int>(tup.data(), k));
            if (sign == 0) continue;
            acc += double(sign) * (coeff * a.comp[comb_rank(n, tup)].truncated(order));
          }
      }
    }
    out.comp[i] = acc;
  }
  return out;
}

}  // namespace

TracJet weyl_curvature_term(const Geometry& geom, const TracJet& F, const JetTen4& weyl) {
  const int order = F.order();
  JetMat zeta = zeta_scale(geom, F.p, order, F.scale);
  TracJet out = TracJet::make(F.p, F.n, F.k, F.w - 2.0, F.scale, order);
  if (F.has_mu()) out.mu = weyl_sums(geom, F.mu, weyl, zeta);
  if (F.has_xi()) out.xi = weyl_sums(geom, F.xi, weyl, zeta);
  if (out.has_mu()) out.mu.w = out.w + double(out.k);
  if (out.has_xi()) out.xi.w = out.w + double(out.k);
  return out;
}

TracJet sigma_mult(const Geometry& geom, const TracJet& F) {
  TracJet out = F;
  out.w = F.w + double(geom.alpha());
  if (F.zero_bundle()) return out;
  Jet sig = geom.gauge_factor(F.p, F.order(), Geometry::kLC, F.scale, geom.alpha());
  if (out.has_mu()) {
    out.mu = sig * out.mu;
    out.mu.w = out.w + double(out.k);
  }
  if (out.has_xi()) {
    out.xi = sig * out.xi;
    out.xi.w = out.w + double(out.k);
  }
  return out;
}

TracJet ytilde(const Geometry& geom, const TracJet& F) {
  if (geom.model() == Model::minkowski_cone)
    throw CapabilityError("ytilde needs a nonvanishing metrisability scalar");
  TracJet a = tractor_codiff(geom, d_ext(geom, F));
  TracJet bb = d_ext(geom, tractor_codiff(geom, F));
  TracJet sum = a + bb;
  Jet finv = reciprocal(geom.boundary(F.p, sum.order(), F.scale).f);
  return finv * sum;
}

TracJet y_op(const Geometry& geom, const TracJet& F) {
  if (geom.model() == Model::minkowski_cone)
    throw CapabilityError("y needs a nonvanishing metrisability scalar");
  TracJet lap = tractor_laplacian(geom, F);
  Jet finv = reciprocal(geom.boundary(F.p, lap.order(), F.scale).f);
  return -1.0 * (finv * lap);
}

TracJet h_op(const TracJet& F) { return (F.w + 0.5 * double(F.n + 1)) * F; }

TracJet commutator_x_laplacian_residual(const Geometry& geom, const TracField& F, const Point& p,
                                        int order) {
  TracJet Fv = F(p, order + 2);
  TracJet a = sigma_mult(geom, tractor_laplacian(geom, Fv));
  TracJet bb = tractor_laplacian(geom, sigma_mult(geom, Fv));
  TracJet comm = a - bb;
  // closed form: [x, Laplacian] = -(sigma^{-1} I^2 / alpha)(2w + d + alpha)
  const double alpha = geom.alpha();
  const int d = geom.dim() - 1;
  Jet fj = geom.boundary(p, comm.order(), Fv.scale).f;
  cplx coef = 2.0 * Fv.w + double(d) + alpha;
  TracJet closed = (1.0 / alpha) * (fj * (coef * Fv.truncated(comm.order())));
  closed.w = Fv.w + alpha - 2.0;
  if (closed.has_mu()) closed.mu.w = closed.w + double(closed.k);
  if (closed.has_xi()) closed.xi.w = closed.w + double(closed.k);
  return comm + closed;
}

TracJet potential_recover(const Geometry& geom, const TracField& F, const Point& p, int order,
                          double closed_tol) {
  TracJet Fv = F(p, order + 1);
  if (std::abs(Fv.w + double(Fv.k)) < 1e-9)
    throw PreconditionError("potential recovery excluded at w + k = 0");
  TracJet dF = d_ext(geom, Fv);
  double closed_res = rel_residual(dF, Fv.max_abs());
  if (closed_res > closed_tol)
    throw PreconditionError("input is not closed: d residual " + std::to_string(closed_res));
  TracJet hooked = scale_hook(geom, Fv.truncated(order));
  Jet finv = reciprocal(geom.boundary(p, order, Fv.scale).f);
  TracJet A = (-2.0 / (Fv.w + double(Fv.k))) * (finv * hooked);
  return A;
}

ProcaReport proca_system_check(const Geometry& geom, const FormField& phi, cplx w, const Point& p) {
  const int n = geom.dim();
  FormJet ph = phi(p, 2);
  const int k = ph.k;
  if (std::abs(w + double(n + 1 - k)) < 1e-9 || std::abs(w + double(k)) < 1e-9)
    throw PreconditionError("excluded Proca weight");
  TracJet A = TracJet::make(p, n, k, w, Geometry::kLC, 2);
  A.xi = ph;
  A.xi.w = w + double(k);  // xi = phi sigma^{(w+k)/2}; LC component of sigma is 1
  ProcaReport rep;
  rep.m2 = (w - 1.0 + double(n - k)) * (w + double(k));

  TracJet dA = d_ext(geom, A);
  TracJet dsd = tractor_codiff(geom, dA);
  TracJet dsA = tractor_codiff(geom, A);
  double ref = A.max_abs();
  rep.gauge_residual = dsA.max_abs() / (1.0 + ref);

  BoundaryJets b = geom.boundary(p, 0, Geometry::kLC);
  Jet fs = b.f * reciprocal(b.sigma);
  FormJet proca = codifferential_base(geom, cov_ext_d(geom, A.xi));
  proca -= (0.25 * rep.m2) * (fs * A.xi.truncated(0));
  proca.w = dsd.xi.w;
  rep.proca_slot_residual = rel_residual(dsd.xi - proca, proca.max_abs());

  if (dsd.has_mu()) {
    FormJet top = -(w + double(k)) * codifferential_base(geom, A.xi.truncated(1));
    top.w = dsd.mu.w;
    rep.top_slot_residual = rel_residual(dsd.mu - top, top.max_abs());
  } else {
    rep.top_slot_residual = 0.0;
  }
  return rep;
}

GaugedBoxReport gauged_box_minkowski(const Geometry& geom, const ScalarField& tau, double m,
                                     const Point& p) {
  if (geom.model() != Model::minkowski_cone)
    throw CapabilityError("the gauged wave operator lives on the Minkowski cone");
  const int n = geom.dim();
  const cplx alpha = cplx(0.0, m) * double(n + 3);
  Jet rho1 = Jet::coordinate(n, 1, 0, p[0]);
  Jet rho2 = Jet::coordinate(n, 2, 0, p[0]);

  Jet t = tau(p, 2);
  JetMat ginv = geom.metric_inv(p, 0);
  JetTen3 gam = geom.christoffel(p, 1);

  // xi~_a = alpha grad_a rho / rho^2 (only the rho component in this chart)
  auto xi_comp = [&](int a, int order) {
    if (a != 0) return Jet(n, order);
    Jet r = order == 1 ? rho1 : rho2;
    return alpha * reciprocal((r * r).truncated(order));
  };

  // u_b = grad_b tau + (1/(n+3)) xi~_b tau
  std::vector<Jet> u(n, Jet(n, 1));
  for (int b = 0; b < n; ++b) u[b] = partial(t, b) + (1.0 / double(n + 3)) * (xi_comp(b, 1) * t.truncated(1));
  // box-like: g^{ab} ( grad_a u_b - (1/(n+3)) xi~_a u_b )
  Jet lhs(n, 0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Jet cov = partial(u[b], a);
      for (int c = 0; c < n; ++c) cov -= gam(c, a, b).truncated(0) * u[c].truncated(0);
      cov -= (1.0 / double(n + 3)) * (xi_comp(a, 0) * u[b].truncated(0));
      lhs += ginv(a, b) * cov;
    }
  // rhs = (box + m^2) tau - i m (n-1) rho tau
  Jet box(n, 0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Jet cov = partial(partial(t, a), b);
      for (int c = 0; c < n; ++c) cov -= gam(c, a, b).truncated(0) * partial(t, c).truncated(0);
      box += ginv(a, b) * cov;
    }
  Jet rhs = box + (m * m) * t.truncated(0) - cplx(0.0, m) * double(n - 1) * (rho2.truncated(0) * t.truncated(0));

  GaugedBoxReport rep;
  rep.identity_residual = (lhs - rhs).max_abs() / (1.0 + rhs.max_abs());

  // xi~^a xi~_a = alpha^2 and grad^a xi~_a = -alpha (n-1) rho
  Jet xi2(n, 0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) xi2 += ginv(a, b) * (xi_comp(a, 0) * xi_comp(b, 0));
  rep.xi_norm_residual = (xi2 - Jet::constant(n, 0, alpha * alpha)).max_abs() / (1.0 + std::abs(alpha * alpha));
  Jet div(n, 0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Jet cov = partial(xi_comp(b, 1), a);
      for (int c = 0; c < n; ++c) cov -= gam(c, a, b).truncated(0) * xi_comp(c, 0);
      div += ginv(a, b) * cov;
    }
  Jet target = -alpha * double(n - 1) * rho2.truncated(0);
  rep.xi_div_residual = (div - target).max_abs() / (1.0 + target.max_abs());
  return rep;
}

std::vector<TractorOperator> standard_operators(int alpha, bool with_hodge_family) {
  std::vector<TractorOperator> ops;
  ops.push_back({"d_ext", -1.0, +1, 1,
                 [](const Geometry& g, const TracJet& F) { return d_ext(g, F); }});
  ops.push_back({"sigma", double(alpha), 0, 0,
                 [](const Geometry& g, const TracJet& F) { return sigma_mult(g, F); }});
  if (with_hodge_family) {
    ops.push_back({"hodge", 0.0, 0, 0,
                   [](const Geometry& g, const TracJet& F) { return tractor_hodge(g, F); }});
    ops.push_back({"codiff", -1.0, -1, 1,
                   [](const Geometry& g, const TracJet& F) { return tractor_codiff(g, F); }});
    ops.push_back({"scale_wedge", 1.0, +1, 0,
                   [](const Geometry& g, const TracJet& F) { return scale_wedge(g, F); }});
    ops.push_back({"scale_hook", 1.0, -1, 0,
                   [](const Geometry& g, const TracJet& F) { return scale_hook(g, F); }});
    ops.push_back({"laplacian", -2.0, 0, 2,
                   [](const Geometry& g, const TracJet& F) { return tractor_laplacian(g, F); }});
    ops.push_back({"ytilde", -2.0, 0, 2,
                   [](const Geometry& g, const TracJet& F) { return ytilde(g, F); }});
  }
  return ops;
}

double rel_residual(const TracJet& diff, double ref_norm) {
  return diff.max_abs() / (1.0 + ref_norm);
}

}  // namespace ptrac
