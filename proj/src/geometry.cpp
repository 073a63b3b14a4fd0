#include "ptrac/geometry.hpp"

#include <cmath>

namespace ptrac {

namespace {

Jet coord_jet(const Point& p, int order, int axis) {
  return Jet::coordinate(static_cast<int>(p.size()), order, axis, p[axis]);
}

}  // namespace

Geometry Geometry::de_sitter(int d) {
  if (d < 1 || d > 3) throw CapabilityError("de Sitter chart supports 1 <= d <= 3");
  Geometry g;
  g.model_ = Model::de_sitter;
  g.n_ = d + 1;
  g.alpha_ = 2;
  g.signature_.assign(g.n_, 1);
  g.signature_[0] = -1;
  g.domain_.lo = Eigen::VectorXd::Constant(g.n_, 0.3);
  g.domain_.hi = Eigen::VectorXd::Constant(g.n_, M_PI - 0.3);
  g.domain_.lo[0] = 5e-4;
  g.domain_.hi[0] = 0.49;
  g.domain_.sample_lo = g.domain_.lo;
  g.domain_.sample_hi = g.domain_.hi;
  g.domain_.sample_lo[0] = 0.08;
  g.domain_.sample_hi[0] = 0.42;
  g.scales_.push_back({"LC", {}});
  // boundary-regular scale: unit rho^{-1/2} relative to LC
  g.scale_S_ = g.add_scale("S", [](const Point& p, int order) {
    return -0.5 * log(coord_jet(p, order, 0));
  });
  return g;
}

Geometry Geometry::minkowski_cone(int n) {
  if (n < 2 || n > 5) throw CapabilityError("Minkowski cone chart supports 2 <= n <= 5");
  Geometry g;
  g.model_ = Model::minkowski_cone;
  g.n_ = n;
  g.alpha_ = 1;
  g.signature_.assign(g.n_, -1);
  g.signature_[0] = 1;
  g.domain_.lo = Eigen::VectorXd::Constant(g.n_, -1.2);
  g.domain_.hi = Eigen::VectorXd::Constant(g.n_, 1.2);
  g.domain_.lo[0] = 5e-4;
  g.domain_.hi[0] = 1.0;
  g.domain_.sample_lo = Eigen::VectorXd::Constant(g.n_, -0.7);
  g.domain_.sample_hi = Eigen::VectorXd::Constant(g.n_, 0.7);
  g.domain_.sample_lo[0] = 0.1;
  g.domain_.sample_hi[0] = 0.6;
  g.scales_.push_back({"LC", {}});
  g.scale_S_ = g.add_scale("S", [](const Point& p, int order) {
    return -log(coord_jet(p, order, 0));
  });
  return g;
}

Geometry Geometry::generic(GenericMetricSpec spec) {
  Geometry g;
  g.model_ = Model::generic;
  g.n_ = spec.dim;
  g.alpha_ = 2;
  g.domain_.lo = spec.lo;
  g.domain_.hi = spec.hi;
  g.domain_.sample_lo = spec.lo;
  g.domain_.sample_hi = spec.hi;
  g.gspec_ = std::move(spec);
  g.scales_.push_back({"LC", {}});

  // probe grid: symmetry and invertibility
  Point mid = 0.5 * (g.domain_.lo + g.domain_.hi);
  std::mt19937_64 rng(12345);
  for (int trial = 0; trial < 8; ++trial) {
    Point p = mid;
    if (trial > 0)
      for (int i = 0; i < g.n_; ++i) {
        std::uniform_real_distribution<double> u(g.domain_.lo[i], g.domain_.hi[i]);
        p[i] = u(rng);
      }
    JetMat m = g.metric_jets(p, 0);
    Eigen::MatrixXd mv(g.n_, g.n_);
    for (int a = 0; a < g.n_; ++a)
      for (int b = 0; b < g.n_; ++b) {
        if (std::abs(m(a, b).value() - m(b, a).value()) > 1e-12)
          throw StructuralError("generic metric components are not symmetric");
        if (std::abs(m(a, b).value().imag()) > 1e-12)
          throw StructuralError("generic metric components must be real");
        mv(a, b) = m(a, b).value().real();
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mv);
    int neg = 0;
    for (int i = 0; i < g.n_; ++i) {
      if (std::abs(es.eigenvalues()[i]) < 1e-10)
        throw StructuralError("generic metric degenerate on probe grid");
      if (es.eigenvalues()[i] < 0) ++neg;
    }
    if (trial == 0) {
      g.signature_.assign(g.n_, 1);
      for (int i = 0; i < neg; ++i) g.signature_[i] = -1;
    }
  }
  return g;
}

Point Geometry::sample(std::mt19937_64& rng) const {
  Point p(n_);
  for (int i = 0; i < n_; ++i) {
    std::uniform_real_distribution<double> u(domain_.sample_lo[i], domain_.sample_hi[i]);
    p[i] = u(rng);
  }
  return p;
}

int Geometry::add_scale(const std::string& name, ScalarField log_gauge) {
  scales_.push_back({name, std::move(log_gauge)});
  return static_cast<int>(scales_.size()) - 1;
}

int Geometry::scale_S() const {
  if (scale_S_ < 0) throw CapabilityError("geometry has no boundary-regular scale");
  return scale_S_;
}

JetVec Geometry::upsilon(const Point& p, int order, int from, int to) const {
  Jet diff = Jet::constant(n_, order + 1, 0.0);
  if (scales_[from].log_gauge) diff += scales_[from].log_gauge(p, order + 1);
  if (scales_[to].log_gauge) diff -= scales_[to].log_gauge(p, order + 1);
  JetVec u(n_, Jet(n_, order));
  for (int a = 0; a < n_; ++a) u(a) = partial(diff, a);
  return u;
}

Jet Geometry::gauge_factor(const Point& p, int order, int from, int to, cplx w) const {
  Jet diff = Jet::constant(n_, order, 0.0);
  if (scales_[to].log_gauge) diff += scales_[to].log_gauge(p, order);
  if (scales_[from].log_gauge) diff -= scales_[from].log_gauge(p, order);
  return exp((-w) * diff);
}

JetMat Geometry::metric_jets(const Point& p, int order) const {
  JetMat g(n_, Jet(n_, order));
  switch (model_) {
    case Model::de_sitter: {
      Jet rho = coord_jet(p, order, 0);
      Jet one_m = 1.0 + (-2.0) * rho;
      g(0, 0) = -0.25 * reciprocal(rho * rho * one_m);
      Jet warp = 0.5 * reciprocal(rho);
      Jet h = Jet::constant(n_, order, 1.0);
      for (int i = 1; i < n_; ++i) {
        g(i, i) = warp * h;
        Jet s = sin(coord_jet(p, order, i));
        h = h * s * s;
      }
      break;
    }
    case Model::minkowski_cone: {
      Jet rho = coord_jet(p, order, 0);
      Jet r2 = reciprocal(rho * rho);
      g(0, 0) = r2 * r2;
      Jet denom = Jet::constant(n_, order, 1.0);
      for (int i = 1; i < n_; ++i) {
        Jet xi = coord_jet(p, order, i);
        denom += xi * xi;
      }
      Jet inv_denom = reciprocal(denom);
      for (int i = 1; i < n_; ++i)
        for (int j = 1; j < n_; ++j) {
          Jet xi = coord_jet(p, order, i), xj = coord_jet(p, order, j);
          g(i, j) = r2 * (xi * xj * inv_denom - Jet::constant(n_, order, i == j ? 1.0 : 0.0));
        }
      break;
    }
    case Model::generic: {
      for (int a = 0; a < n_; ++a)
        for (int b = 0; b < n_; ++b) g(a, b) = gspec_.comps[a * n_ + b].eval(p, order);
      break;
    }
  }
  return g;
}

JetMat Geometry::metric(const Point& p, int order) const {
  if (!domain_.contains(p)) throw DomainError("point outside chart domain");
  return metric_jets(p, order);
}

JetMat inverse(const JetMat& m) {
  const int n = m.n;
  JetMat a = m;
  JetMat inv(n, Jet(m.v[0].dim(), m.v[0].order()));
  for (int i = 0; i < n; ++i) inv(i, i) = Jet::constant(m.v[0].dim(), m.v[0].order(), 1.0);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col).value()) > std::abs(a(piv, col).value())) piv = r;
    if (std::abs(a(piv, col).value()) < 1e-14) throw DomainError("singular jet matrix");
    if (piv != col)
      for (int c = 0; c < n; ++c) {
        std::swap(a.v[piv * n + c], a.v[col * n + c]);
        std::swap(inv.v[piv * n + c], inv.v[col * n + c]);
      }
    Jet ip = reciprocal(a(col, col));
    for (int c = 0; c < n; ++c) {
      a(col, c) = a(col, c) * ip;
      inv(col, c) = inv(col, c) * ip;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      Jet factor = a(r, col);
      if (factor.max_abs() == 0.0) continue;
      for (int c = 0; c < n; ++c) {
        a(r, c) -= factor * a(col, c);
        inv(r, c) -= factor * inv(col, c);
      }
    }
  }
  return inv;
}

Jet determinant(const JetMat& m) {
  const int n = m.n;
  JetMat a = m;
  Jet det = Jet::constant(m.v[0].dim(), m.v[0].order(), 1.0);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col).value()) > std::abs(a(piv, col).value())) piv = r;
    if (std::abs(a(piv, col).value()) < 1e-14) return Jet(m.v[0].dim(), m.v[0].order());
    if (piv != col) {
      for (int c = 0; c < n; ++c) std::swap(a.v[piv * n + c], a.v[col * n + c]);
      det = -det;
    }
    det = det * a(col, col);
    Jet ip = reciprocal(a(col, col));
    for (int r = col + 1; r < n; ++r) {
      Jet factor = a(r, col) * ip;
      if (factor.max_abs() == 0.0) continue;
      for (int c = col; c < n; ++c) a(r, c) -= factor * a(col, c);
    }
  }
  return det;
}

JetMat Geometry::metric_inv(const Point& p, int order) const {
  return inverse(metric(p, order));
}

JetTen3 Geometry::christoffel(const Point& p, int order, int scale) const {
  JetMat g = metric(p, order + 1);
  JetMat ginv = inverse(g);
  JetTen3 gamma(n_, Jet(n_, order));
  for (int a = 0; a < n_; ++a)
    for (int b = a; b < n_; ++b) {
      std::vector<Jet> lower(n_, Jet(n_, order));
      for (int d = 0; d < n_; ++d)
        lower[d] = 0.5 * (partial(g(d, b), a) + partial(g(d, a), b) - partial(g(a, b), d));
      for (int c = 0; c < n_; ++c) {
        Jet s(n_, order);
        for (int d = 0; d < n_; ++d) s += ginv(c, d).truncated(order) * lower[d];
        gamma(c, a, b) = s;
        gamma(c, b, a) = s;
      }
    }
  if (scale != kLC) {
    JetVec ups = upsilon(p, order, kLC, scale);
    for (int c = 0; c < n_; ++c)
      for (int a = 0; a < n_; ++a)
        for (int b = 0; b < n_; ++b) {
          if (c == b) gamma(c, a, b) += ups(a);
          if (c == a) gamma(c, a, b) += ups(b);
        }
  }
  return gamma;
}

CurvaturePack Geometry::curvature(const Point& p, int order, int scale, bool with_cotton) const {
  const JetTen3 gam = christoffel(p, order + 1, scale);
  CurvaturePack out;
  out.riemann = JetTen4(n_, Jet(n_, order));
  // R_ab^c_d = d_a Gamma^c_bd - d_b Gamma^c_ad + Gamma^c_ae Gamma^e_bd - Gamma^c_be Gamma^e_ad
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < n_; ++b)
      for (int c = 0; c < n_; ++c)
        for (int d = 0; d < n_; ++d) {
          Jet r = partial(gam(c, b, d), a) - partial(gam(c, a, d), b);
          for (int e = 0; e < n_; ++e)
            r += gam(c, a, e).truncated(order) * gam(e, b, d).truncated(order) -
                 gam(c, b, e).truncated(order) * gam(e, a, d).truncated(order);
          out.riemann(a, b, c, d) = r;
        }
  out.ricci = JetMat(n_, Jet(n_, order));
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < n_; ++b) {
      Jet s(n_, order);
      for (int c = 0; c < n_; ++c) s += out.riemann(c, a, c, b);
      out.ricci(a, b) = s;
    }
  // (n-1) P_ab = R_ab + beta_ab,  beta_ab = -2/(n+1) R_[ab]
  out.beta = JetMat(n_, Jet(n_, order));
  out.schouten = JetMat(n_, Jet(n_, order));
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < n_; ++b) {
      out.beta(a, b) = (-1.0 / (n_ + 1.0)) * (out.ricci(a, b) - out.ricci(b, a));
      out.schouten(a, b) = (1.0 / (n_ - 1.0)) * (out.ricci(a, b) + out.beta(a, b));
    }
  out.weyl = JetTen4(n_, Jet(n_, order));
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < n_; ++b)
      for (int c = 0; c < n_; ++c)
        for (int d = 0; d < n_; ++d) {
          Jet w = out.riemann(a, b, c, d) - out.beta(a, b) * cplx(c == d ? 1.0 : 0.0);
          if (c == a) w -= out.schouten(b, d);
          if (c == b) w += out.schouten(a, d);
          out.weyl(a, b, c, d) = w;
        }
  if (with_cotton) {
    const JetMat P1 = curvature(p, order + 1, scale, false).schouten;
    JetTen3 y(n_, Jet(n_, order));
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < n_; ++b)
        for (int c = 0; c < n_; ++c) {
          // grad_a P_bc - grad_b P_ac; Gamma terms cancel pairwise except via P skew
          Jet t = partial(P1(b, c), a) - partial(P1(a, c), b);
          for (int e = 0; e < n_; ++e)
            t += -gam(e, a, b).truncated(order) * P1(e, c).truncated(order) -
                 gam(e, a, c).truncated(order) * P1(b, e).truncated(order) +
                 gam(e, b, a).truncated(order) * P1(e, c).truncated(order) +
                 gam(e, b, c).truncated(order) * P1(a, e).truncated(order);
          y(a, b, c) = t;
        }
    out.cotton = std::move(y);
  }
  return out;
}

namespace {

/// Tensor covariant derivative of jet components: new index first.
/// `up` contravariant indices lead the existing index list.
std::vector<Jet> cov_deriv(int n, const std::vector<Jet>& comps, int up, int down,
                           const JetTen3& gam, int order) {
  const int rank = up + down;
  size_t sz = 1;
  for (int i = 0; i < rank; ++i) sz *= n;
  std::vector<Jet> out(sz * n, Jet(n, order));
  std::vector<int> idx(rank, 0);
  for (size_t flat = 0; flat < sz; ++flat) {
    size_t rem = flat;
    for (int i = rank - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(rem % n);
      rem /= n;
    }
    for (int a = 0; a < n; ++a) {
      Jet v = partial(comps[flat], a);
      for (int i = 0; i < rank; ++i) {
        for (int e = 0; e < n; ++e) {
          size_t nb = 0;
          for (int j = 0; j < rank; ++j) nb = nb * n + (j == i ? e : idx[j]);
          Jet term = gam.v[((static_cast<size_t>(i < up ? idx[i] : e) * n + a) * n +
                            (i < up ? e : idx[i]))]
                         .truncated(order) *
                     comps[nb].truncated(order);
          if (i < up)
            v += term;
          else
            v -= term;
        }
      }
      out[a * sz + flat] = v;
    }
  }
  return out;
}

}  // namespace

BoundaryJets Geometry::boundary(const Point& p, int order, int scale) const {
  BoundaryJets b;
  const int n = n_;
  // sigma: LC component 1; re-trivialize weight-alpha
  b.sigma = gauge_factor(p, order, kLC, scale, alpha_);
  // zeta: LC components g^{ab}; weight -2
  JetMat ginv = metric_inv(p, order + 1);
  Jet zf = gauge_factor(p, order + 1, kLC, scale, -2.0);
  b.zeta = JetMat(n, Jet(n, order + 1));
  for (int a = 0; a < n; ++a)
    for (int bb = 0; bb < n; ++bb) b.zeta(a, bb) = ginv(a, bb) * zf;
  b.zeta_lo = inverse(b.zeta);
  for (auto& j : b.zeta_lo.v) j = j.truncated(order);

  const JetTen3 gam = christoffel(p, order, scale);
  std::vector<Jet> dz = cov_deriv(n, b.zeta.v, 2, 0, gam, order);
  b.T = JetVec(n, Jet(n, order));
  for (int bb = 0; bb < n; ++bb) {
    Jet s(n, order);
    for (int a = 0; a < n; ++a) s += dz[(static_cast<size_t>(a) * n + a) * n + bb];
    b.T(bb) = (-1.0 / (n + 1.0)) * s;
  }

  // hxx = zeta^{ab} P_ab / n + grad_a grad_b zeta^{ab} / (n (n+1))
  CurvaturePack cur = curvature(p, order, scale);
  Jet tr(n, order);
  for (int a = 0; a < n; ++a)
    for (int bb = 0; bb < n; ++bb) tr += b.zeta(a, bb).truncated(order) * cur.schouten(a, bb);
  Jet ddz(n, order);
  {
    const JetTen3 gam1 = christoffel(p, order + 1, scale);
    JetMat ginv2 = metric_inv(p, order + 2);
    Jet zf2 = gauge_factor(p, order + 2, kLC, scale, -2.0);
    std::vector<Jet> zeta2(static_cast<size_t>(n) * n, Jet(n, order + 2));
    for (int a = 0; a < n; ++a)
      for (int bb = 0; bb < n; ++bb) zeta2[static_cast<size_t>(a) * n + bb] = ginv2(a, bb) * zf2;
    std::vector<Jet> dz1 = cov_deriv(n, zeta2, 2, 0, gam1, order + 1);
    // dz1 layout is (c, a, b) = grad_c zeta^{ab}; cov_deriv expects the
    // contravariant indices first, so permute to (a, b, c).
    std::vector<Jet> perm(dz1.size(), Jet(n, order + 1));
    for (int c = 0; c < n; ++c)
      for (int a = 0; a < n; ++a)
        for (int bb = 0; bb < n; ++bb)
          perm[(static_cast<size_t>(a) * n + bb) * n + c] = dz1[(static_cast<size_t>(c) * n + a) * n + bb];
    std::vector<Jet> ddz1 = cov_deriv(n, perm, 2, 1, gam1, order);
    // ddz1 layout: (d, a, b, c) = grad_d grad_c zeta^{ab}; contract d=a, c=b
    for (int a = 0; a < n; ++a)
      for (int bb = 0; bb < n; ++bb)
        ddz += ddz1[((static_cast<size_t>(a) * n + a) * n + bb) * n + bb];
  }
  b.hxx = (1.0 / n) * tr + (1.0 / (n * (n + 1.0))) * ddz;

  // I = D sigma = (alpha sigma, grad sigma); I^2 = H(I, I)
  Jet sig1 = gauge_factor(p, order + 1, kLC, scale, alpha_);
  JetVec dsig(n, Jet(n, order));
  for (int a = 0; a < n; ++a) dsig(a) = partial(sig1, a);
  Jet i2(n, order);
  Jet sig = b.sigma;
  for (int a = 0; a < n; ++a)
    for (int bb = 0; bb < n; ++bb) i2 += b.zeta(a, bb).truncated(order) * dsig(a) * dsig(bb);
  for (int bb = 0; bb < n; ++bb) i2 += 2.0 * b.T(bb) * (double(alpha_) * sig) * dsig(bb);
  i2 += b.hxx * (double(alpha_) * sig) * (double(alpha_) * sig);
  b.i2 = i2;
  b.f = i2 * reciprocal(sig);
  for (auto& j : b.zeta.v) j = j.truncated(order);

  double fv = b.f.value().real();
  b.eps = std::abs(fv) < 1e-9 ? 0 : (fv > 0 ? 1 : -1);
  double dv = determinant(b.zeta).value().real();
  b.sgn_det_zeta = dv > 0 ? 1 : -1;
  return b;
}

JetMat Geometry::sphere_metric(const Point& p, int order) const {
  if (model_ != Model::de_sitter) throw CapabilityError("sphere block requires de Sitter");
  JetMat h(n_, Jet(n_, order));
  Jet acc = Jet::constant(n_, order, 1.0);
  for (int i = 1; i < n_; ++i) {
    h(i, i) = acc;
    Jet s = sin(coord_jet(p, order, i));
    acc = acc * s * s;
  }
  return h;
}

Jet Geometry::sphere_laplacian(const ScalarField& phi, const Point& p, int order) const {
  JetMat h = sphere_metric(p, order + 1);
  const int n = n_;
  // invert the angle block only
  JetMat hang(n - 1, Jet(n, order + 1));
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j) hang(i - 1, j - 1) = h(i, j);
  JetMat hinv = inverse(hang);
  Jet f = phi(p, order + 2);
  // Delta_S phi = h^{ij} (d_i d_j phi - Gamma_S^k_ij d_k phi)
  Jet out(n, order);
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j) {
      Jet hij = hinv(i - 1, j - 1).truncated(order);
      out += hij * partial(partial(f, i), j);
      for (int k = 1; k < n; ++k) {
        Jet gam = 0.5 * (partial(h(k, j), i) + partial(h(k, i), j) - partial(h(i, j), k));
        // raise with h^{lk}
        for (int l = 1; l < n; ++l)
          out -= hij * hinv(l - 1, k - 1).truncated(order) * gam.truncated(order) *
                 partial(f, l).truncated(order);
      }
    }
  return out;
}

Jet Geometry::box_rho(const Point& p) const {
  if (model_ == Model::generic) throw CapabilityError("box rho requires a boundary model");
  JetMat ginv = metric_inv(p, 0);
  JetTen3 gam = christoffel(p, 0);
  // box rho = -g^{ab} Gamma^0_ab (rho is the coordinate x0)
  Jet out(n_, 0);
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < n_; ++b) out -= ginv(a, b) * gam(0, a, b);
  return out;
}

double Geometry::box_rho_closed(const Point& p) const {
  double rho = p[0];
  if (model_ == Model::de_sitter) {
    int d = n_ - 1;
    return 2 * rho * (d - 2 + 2 * rho * (3 - d));
  }
  if (model_ == Model::minkowski_cone) return -(n_ - 3) * rho * rho * rho;
  throw CapabilityError("box rho closed form requires a boundary model");
}

Jet Geometry::grad_rho_sq(const Point& p) const {
  JetMat ginv = metric_inv(p, 0);
  return ginv(0, 0);
}

Jet Geometry::hat_box_scalar(const ScalarField& phi, const Point& p) const {
  if (model_ != Model::de_sitter) throw CapabilityError("hat box requires de Sitter");
  const int order = 0;
  Jet f = phi(p, 2);
  JetMat ginv = metric_inv(p, order);
  JetTen3 gam = christoffel(p, order, scale_S_);
  // scalar: hat-grad_a hat-grad_b phi = d_a d_b phi - hatGamma^c_ab d_c phi
  Jet out(n_, order);
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < n_; ++b) {
      Jet hess = partial(partial(f, a), b);
      for (int c = 0; c < n_; ++c) hess -= gam(c, a, b) * partial(f, c).truncated(order);
      out += ginv(a, b) * hess;
    }
  return out;
}

double Geometry::hat_box_scalar_closed(const ScalarField& phi, const Point& p) const {
  if (model_ != Model::de_sitter) throw CapabilityError("hat box requires de Sitter");
  int d = n_ - 1;
  double rho = p[0];
  Jet f = phi(p, 2);
  std::vector<int> e(n_, 0);
  e[0] = 2;
  cplx d2 = 2.0 * f.coeff(std::span<const int>(e.data(), n_));
  e[0] = 1;
  cplx d1 = f.coeff(std::span<const int>(e.data(), n_));
  Jet lap = sphere_laplacian(phi, p, 0);
  cplx val = -4 * rho * rho * (1 - 2 * rho) * d2 + 2 * rho * (2 * rho * (1 - d) + d) * d1 +
             2 * rho * lap.value();
  return val.real();
}

JetTen3 Geometry::me_residual(const Point& p, int scale) const {
  const int order = 0;
  BoundaryJets b = boundary(p, order + 1, scale);
  JetTen3 gam = christoffel(p, order + 1, scale);
  std::vector<Jet> dz = cov_deriv(n_, b.zeta.v, 2, 0, gam, order);
  // trace part: grad_d zeta^{da}
  JetVec tracev(n_, Jet(n_, order));
  for (int a = 0; a < n_; ++a) {
    Jet s(n_, order);
    for (int d = 0; d < n_; ++d) s += dz[(static_cast<size_t>(d) * n_ + d) * n_ + a];
    tracev(a) = s;
  }
  JetTen3 res(n_, Jet(n_, order));
  for (int c = 0; c < n_; ++c)
    for (int a = 0; a < n_; ++a)
      for (int b2 = 0; b2 < n_; ++b2) {
        Jet r = dz[(static_cast<size_t>(c) * n_ + a) * n_ + b2];
        if (b2 == c) r -= (1.0 / (n_ + 1.0)) * tracev(a);
        if (a == c) r -= (1.0 / (n_ + 1.0)) * tracev(b2);
        res(c, a, b2) = r;
      }
  return res;
}

Geometry::Me2Residual Geometry::me2_residual(const Point& p, int scale) const {
  const int order = 0;
  const int n = n_;
  BoundaryJets b = boundary(p, order + 1, scale);
  CurvaturePack cur = curvature(p, order, scale, true);
  JetTen3 gam = christoffel(p, order, scale);

  Me2Residual r;
  r.ww = me_residual(p, scale);  // ww slot == (ME) up to the (anti)symmetrized trace
  // recompute plainly: grad_c zeta^{ab} + T^a delta^b_c + T^b delta^a_c
  {
    JetTen3 gam1 = christoffel(p, order + 1, scale);
    std::vector<Jet> dz = cov_deriv(n, b.zeta.v, 2, 0, gam1, order);
    JetTen3 ww(n, Jet(n, order));
    for (int c = 0; c < n; ++c)
      for (int a = 0; a < n; ++a)
        for (int b2 = 0; b2 < n; ++b2) {
          Jet t = dz[(static_cast<size_t>(c) * n + a) * n + b2];
          if (b2 == c) t += b.T(a).truncated(order);
          if (a == c) t += b.T(b2).truncated(order);
          ww(c, a, b2) = t;
        }
    r.ww = std::move(ww);
  }
  // xw slot: grad_c T^b - zeta^{ab} P_ca + hxx delta^b_c + (1/n) zeta^{ed} W_ce^b_d
  {
    BoundaryJets b1 = boundary(p, order + 1, scale);
    std::vector<Jet> dT = cov_deriv(n, b1.T.v, 1, 0, gam, order);
    r.xw = JetMat(n, Jet(n, order));
    for (int c = 0; c < n; ++c)
      for (int b2 = 0; b2 < n; ++b2) {
        Jet t = dT[static_cast<size_t>(c) * n + b2];
        for (int a = 0; a < n; ++a) t -= b.zeta(a, b2).truncated(order) * cur.schouten(c, a);
        if (b2 == c) t += b.hxx.truncated(order);
        for (int e = 0; e < n; ++e)
          for (int d = 0; d < n; ++d)
            t += (1.0 / n) * b.zeta(e, d).truncated(order) * cur.weyl(c, e, b2, d);
        r.xw(c, b2) = t;
      }
  }
  // xx slot: grad_c hxx - 2 T^b P_cb - (2/n) zeta^{ed} Y_ced
  {
    BoundaryJets b1 = boundary(p, order + 1, scale);
    r.xx = JetVec(n, Jet(n, order));
    for (int c = 0; c < n; ++c) {
      Jet t = partial(b1.hxx, c);
      for (int b2 = 0; b2 < n; ++b2) t -= 2.0 * b.T(b2).truncated(order) * cur.schouten(c, b2);
      for (int e = 0; e < n; ++e)
        for (int d = 0; d < n; ++d)
          t -= (2.0 / n) * b.zeta(e, d).truncated(order) * (*cur.cotton)(c, e, d);
      r.xx(c) = t;
    }
  }
  return r;
}

JetTen3 Geometry::bianchi_weyl_residual(const Point& p) const {
  const int order = 0;
  const int n = n_;
  CurvaturePack cur1 = curvature(p, order + 1, kLC, true);
  JetTen3 gam = christoffel(p, order, kLC);
  std::vector<Jet> db = cov_deriv(n, cur1.beta.v, 0, 2, gam, order);
  auto gb = [&](int x, int y, int z) { return db[(static_cast<size_t>(x) * n + y) * n + z]; };
  JetTen3 res(n, Jet(n, order));
  for (int c = 0; c < n; ++c)
    for (int d = 0; d < n; ++d)
      for (int f = 0; f < n; ++f) {
        Jet div(n, order);
        for (int a = 0; a < n; ++a) {
          Jet t = partial(cur1.weyl(c, d, a, f), a);
          for (int e = 0; e < n; ++e) {
            t += gam(a, a, e).truncated(order) * cur1.weyl(c, d, e, f).truncated(order);
            t -= gam(e, a, c).truncated(order) * cur1.weyl(e, d, a, f).truncated(order);
            t -= gam(e, a, d).truncated(order) * cur1.weyl(c, e, a, f).truncated(order);
            t -= gam(e, a, f).truncated(order) * cur1.weyl(c, d, a, e).truncated(order);
          }
          div += t;
        }
        // minus (n-2) Y_cdf + 3 grad_[c beta_df]
        div -= double(n - 2) * (*cur1.cotton)(c, d, f).truncated(order);
        Jet anti = (gb(c, d, f) + gb(d, f, c) + gb(f, c, d) - gb(c, f, d) - gb(d, c, f) - gb(f, d, c)) *
                   cplx(1.0 / 6.0);
        div += 3.0 * anti;
        res(c, d, f) = div;
      }
  return res;
}

std::pair<JetMat, JetMat> schouten_transform(const Geometry& geom, const Point& p,
                                             const JetMat& P, const JetMat& beta,
                                             const JetVec& upsilon, int scale) {
  const int n = geom.dim();
  const int order = upsilon.v[0].order() - 1;
  JetTen3 gam = geom.christoffel(p, order, scale);
  JetMat Ph(n, Jet(n, order)), bh(n, Jet(n, order));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Jet du = partial(upsilon(a), b);  // d_b Upsilon_a
      Jet dua = partial(upsilon(b), a);
      Jet cov_ab(n, order), cov_ba(n, order);
      cov_ab = dua;  // grad_a Upsilon_b = d_a Upsilon_b - Gamma^c_ab Upsilon_c
      cov_ba = du;
      for (int c = 0; c < n; ++c) {
        cov_ab -= gam(c, a, b).truncated(order) * upsilon(c).truncated(order);
        cov_ba -= gam(c, b, a).truncated(order) * upsilon(c).truncated(order);
      }
      Ph(a, b) = P(a, b).truncated(order) - cov_ab +
                 upsilon(a).truncated(order) * upsilon(b).truncated(order);
      bh(a, b) = beta(a, b).truncated(order) + (cov_ab - cov_ba);
    }
  return {Ph, bh};
}

std::vector<Jet> shifted_cov_deriv(const Geometry& geom, const Point& p, std::vector<Jet> comps,
                                   int up, int down, cplx w, const JetVec& upsilon) {
  const int n = geom.dim();
  const int order = comps[0].order() - 1;
  JetTen3 gam = geom.christoffel(p, order, Geometry::kLC);
  // shifted Christoffels
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (c == b) gam(c, a, b) += upsilon(a).truncated(order);
        if (c == a) gam(c, a, b) += upsilon(b).truncated(order);
      }
  const int rank = up + down;
  size_t sz = 1;
  for (int i = 0; i < rank; ++i) sz *= n;
  std::vector<Jet> out = cov_deriv(n, comps, up, down, gam, order);
  for (int a = 0; a < n; ++a)
    for (size_t i = 0; i < sz; ++i)
      out[a * sz + i] += w * upsilon(a).truncated(order) * comps[i].truncated(order);
  return out;
}

}  // namespace ptrac
