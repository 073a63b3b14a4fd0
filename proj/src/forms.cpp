#include "ptrac/forms.hpp"

namespace ptrac {

namespace {

Jet mul_at(const Jet& a, const Jet& b, int order) {
  return a.truncated(order) * b.truncated(order);
}

void check_same_shape(const FormJet& a, const FormJet& b) {
  if (a.n != b.n || a.k != b.k || a.scale != b.scale)
    throw StructuralError("form shape/scale mismatch");
}

/// zeta^{ab} components in `scale` at the requested order (cheap path).
JetMat zeta_comps(const Geometry& geom, const Point& p, int order, int scale) {
  JetMat ginv = geom.metric_inv(p, order);
  Jet f = geom.gauge_factor(p, order, Geometry::kLC, scale, -2.0);
  for (auto& j : ginv.v) j = j * f;
  return ginv;
}

JetMat zeta_lower_comps(const Geometry& geom, const Point& p, int order, int scale) {
  JetMat g = geom.metric(p, order);
  Jet f = geom.gauge_factor(p, order, Geometry::kLC, scale, 2.0);
  for (auto& j : g.v) j = j * f;
  return g;
}

}  // namespace

FormJet FormJet::zero(const Point& p, int n, int k, cplx w, int scale, int order) {
  FormJet f;
  f.p = p;
  f.n = n;
  f.k = k;
  f.w = w;
  f.scale = scale;
  f.comp.assign(binom(n, k), Jet(n, order));
  return f;
}

Jet& FormJet::at(std::span<const int> tuple) { return comp[comb_rank(n, tuple)]; }
const Jet& FormJet::at(std::span<const int> tuple) const { return comp[comb_rank(n, tuple)]; }

FormJet FormJet::truncated(int order) const {
  FormJet out = *this;
  for (auto& j : out.comp) j = j.truncated(order);
  return out;
}

FormJet FormJet::operator-() const {
  FormJet out = *this;
  for (auto& j : out.comp) j = -j;
  return out;
}

FormJet& FormJet::operator+=(const FormJet& o) {
  check_same_shape(*this, o);
  for (size_t i = 0; i < comp.size(); ++i) comp[i] += o.comp[i];
  return *this;
}

FormJet& FormJet::operator-=(const FormJet& o) {
  check_same_shape(*this, o);
  for (size_t i = 0; i < comp.size(); ++i) comp[i] -= o.comp[i];
  return *this;
}

FormJet operator*(const Jet& s, FormJet a) {
  for (auto& j : a.comp) j = s.truncated(j.order()) * j;
  return a;
}

FormJet operator*(cplx s, FormJet a) {
  for (auto& j : a.comp) j = s * j;
  return a;
}

FormField form_field(int n, int k, cplx w, int scale, std::vector<JetSpec> comps) {
  if (static_cast<long>(comps.size()) != binom(n, k)) throw StructuralError("wrong number of form components");
  return [=](const Point& p, int order) {
    FormJet f = FormJet::zero(p, n, k, w, scale, order);
    for (size_t i = 0; i < comps.size(); ++i) f.comp[i] = comps[i].eval(p, order);
    return f;
  };
}

FormField random_form_field(std::mt19937_64& rng, int n, int k, cplx w, int scale, int deg) {
  std::vector<JetSpec> comps;
  for (long i = 0; i < binom(n, k); ++i) comps.push_back(random_poly_trig(rng, n, deg, 3));
  return form_field(n, k, w, scale, std::move(comps));
}

FormJet wedge(const FormJet& a, const FormJet& b) {
  if (a.n != b.n || a.scale != b.scale) throw StructuralError("wedge: incompatible forms");
  if (a.k + b.k > a.n) throw StructuralError("wedge: degree overflow");
  const int order = std::min(a.order(), b.order());
  FormJet out = FormJet::zero(a.p, a.n, a.k + b.k, a.w + b.w, a.scale, order);
  const auto& ta = combinations(a.n, a.k);
  const auto& tb = combinations(b.n, b.k);
  std::vector<int> merged;
  for (size_t i = 0; i < ta.size(); ++i)
    for (size_t j = 0; j < tb.size(); ++j) {
      int sign = merge_sign(ta[i], tb[j], merged);
      if (sign == 0) continue;
      out.comp[comb_rank(a.n, merged)] += double(sign) * mul_at(a.comp[i], b.comp[j], order);
    }
  return out;
}

Jet zeta_pair(const Geometry& geom, const FormJet& a, const FormJet& b) {
  check_same_shape(a, b);
  const int order = std::min(a.order(), b.order());
  JetMat zeta = zeta_comps(geom, a.p, order, a.scale);
  const auto& tuples = combinations(a.n, a.k);
  Jet out(a.n, order);
  std::vector<int> perm(a.k);
  for (size_t i = 0; i < tuples.size(); ++i)
    for (size_t j = 0; j < tuples.size(); ++j) {
      // det of the zeta minor over (A,B)
      for (int t = 0; t < a.k; ++t) perm[t] = t;
      Jet det(a.n, order);
      std::sort(perm.begin(), perm.end());
      do {
        int sg = 1;
        for (int x = 0; x < a.k; ++x)
          for (int y = x + 1; y < a.k; ++y)
            if (perm[x] > perm[y]) sg = -sg;
        Jet term = Jet::constant(a.n, order, sg);
        for (int t = 0; t < a.k; ++t) term = term * zeta(tuples[i][t], tuples[j][perm[t]]);
        det += term;
      } while (std::next_permutation(perm.begin(), perm.end()));
      if (a.k == 0) det = Jet::constant(a.n, order, 1.0);
      out += det * mul_at(a.comp[i], b.comp[j], order);
    }
  return out;
}

FormJet volume_form(const Geometry& geom, const Point& p, int order, int scale) {
  const int n = geom.dim();
  Jet det = determinant(geom.metric(p, order));
  double sgn = det.value().real() > 0 ? 1.0 : -1.0;
  Jet vol = sqrt(sgn * det);
  vol = vol * geom.gauge_factor(p, order, Geometry::kLC, scale, double(n));
  FormJet out = FormJet::zero(p, n, n, double(n), scale, order);
  out.comp[0] = vol;
  return out;
}

FormJet hodge_star_base(const Geometry& geom, const FormJet& a) {
  const int n = a.n, k = a.k;
  const int order = a.order();
  JetMat zeta = zeta_comps(geom, a.p, order, a.scale);
  Jet vol = volume_form(geom, a.p, order, a.scale).comp[0];
  FormJet out = FormJet::zero(a.p, n, n - k, a.w + double(n) - 2.0 * k, a.scale, order);
  const auto& tk = combinations(n, k);
  // raise all indices of a with zeta
  std::vector<Jet> raised(tk.size(), Jet(n, order));
  std::vector<int> perm(k);
  for (size_t i = 0; i < tk.size(); ++i) {
    Jet acc(n, order);
    for (size_t j = 0; j < tk.size(); ++j) {
      for (int t = 0; t < k; ++t) perm[t] = t;
      Jet det(n, order);
      do {
        int sg = 1;
        for (int x = 0; x < k; ++x)
          for (int y = x + 1; y < k; ++y)
            if (perm[x] > perm[y]) sg = -sg;
        Jet term = Jet::constant(n, order, sg);
        for (int t = 0; t < k; ++t) term = term * zeta(tk[i][t], tk[j][perm[t]]);
        det += term;
      } while (std::next_permutation(perm.begin(), perm.end()));
      if (k == 0) det = Jet::constant(n, order, 1.0);
      acc += det * a.comp[j].truncated(order);
    }
    raised[i] = acc;
  }
  const auto& tj = combinations(n, n - k);
  std::vector<int> merged;
  for (size_t i = 0; i < tk.size(); ++i) {
    for (size_t j = 0; j < tj.size(); ++j) {
      int sign = merge_sign(tk[i], tj[j], merged);
      if (sign == 0) continue;
      out.comp[j] += double(sign) * (vol * raised[i]);
    }
  }
  return out;
}

FormJet contract(const VecJet& X, const FormJet& a) {
  if (a.k == 0) throw StructuralError("contraction with a 0-form");
  if (X.n != a.n || X.scale != a.scale) throw StructuralError("contract: incompatible operands");
  const int order = std::min(a.order(), X.comp[0].order());
  FormJet out = FormJet::zero(a.p, a.n, a.k - 1, a.w + X.w, a.scale, order);
  const auto& tj = combinations(a.n, a.k - 1);
  std::vector<int> merged;
  for (size_t j = 0; j < tj.size(); ++j) {
    Jet acc(a.n, order);
    for (int b = 0; b < a.n; ++b) {
      int one[1] = {b};
      int sign = merge_sign(std::span<const int>(one, 1), tj[j], merged);
      if (sign == 0) continue;
      acc += double(sign) * mul_at(X.comp[b], a.comp[comb_rank(a.n, merged)], order);
    }
    out.comp[j] = acc;
  }
  return out;
}

VecJet sharp(const Geometry& geom, const FormJet& one_form) {
  if (one_form.k != 1) throw StructuralError("sharp expects a 1-form");
  const int order = one_form.order();
  JetMat zeta = zeta_comps(geom, one_form.p, order, one_form.scale);
  VecJet v;
  v.p = one_form.p;
  v.n = one_form.n;
  v.w = one_form.w - 2.0;
  v.scale = one_form.scale;
  v.comp.assign(v.n, Jet(v.n, order));
  for (int a = 0; a < v.n; ++a)
    for (int b = 0; b < v.n; ++b) v.comp[a] += zeta(a, b) * one_form.comp[b].truncated(order);
  return v;
}

FormJet flat(const Geometry& geom, const VecJet& v) {
  const int order = v.comp[0].order();
  JetMat zlo = zeta_lower_comps(geom, v.p, order, v.scale);
  FormJet out = FormJet::zero(v.p, v.n, 1, v.w + 2.0, v.scale, order);
  for (int a = 0; a < v.n; ++a)
    for (int b = 0; b < v.n; ++b) out.comp[a] += zlo(a, b) * v.comp[b].truncated(order);
  return out;
}

std::vector<FormJet> cov_deriv_form(const Geometry& geom, const FormJet& a) {
  const int n = a.n, k = a.k;
  const int order = a.order() - 1;
  if (a.order() < 1) throw OrderExhausted("covariant derivative of an order-0 form");
  JetTen3 gam = geom.christoffel(a.p, order, a.scale);
  std::vector<FormJet> out(n, FormJet::zero(a.p, n, k, a.w, a.scale, order));
  const auto& tk = combinations(n, k);
  std::vector<int> tup(k);
  for (int d = 0; d < n; ++d) {
    for (size_t i = 0; i < tk.size(); ++i) {
      Jet v = partial(a.comp[i], d);
      for (int s = 0; s < k; ++s) {
        for (int e = 0; e < n; ++e) {
          std::copy(tk[i].begin(), tk[i].end(), tup.begin());
          tup[s] = e;
          int sign = sort_sign(std::span<int>(tup.data(), k));
          if (sign == 0) continue;
          v -= double(sign) * mul_at(gam(e, d, tk[i][s]), a.comp[comb_rank(n, tup)], order);
        }
      }
      out[d].comp[i] = v;
    }
  }
  return out;
}

FormJet cov_ext_d(const Geometry& geom, const FormJet& a) {
  const int n = a.n, k = a.k;
  if (k + 1 > n) throw StructuralError("exterior derivative: degree overflow");
  auto grad = cov_deriv_form(geom, a);
  const int order = a.order() - 1;
  FormJet out = FormJet::zero(a.p, n, k + 1, a.w, a.scale, order);
  const auto& tc = combinations(n, k + 1);
  std::vector<int> rest(k);
  for (size_t c = 0; c < tc.size(); ++c) {
    Jet v(n, order);
    for (int i = 0; i <= k; ++i) {
      int d = tc[c][i];
      int r = 0;
      for (int t = 0; t <= k; ++t)
        if (t != i) rest[r++] = tc[c][t];
      double sg = (i % 2 == 0) ? 1.0 : -1.0;
      v += sg * grad[d].comp[comb_rank(n, std::span<const int>(rest.data(), k))];
    }
    out.comp[c] = v;
  }
  return out;
}

FormJet codifferential_base(const Geometry& geom, const FormJet& a) {
  if (a.k == 0) return FormJet::zero(a.p, a.n, 0, a.w - 2.0, a.scale, std::max(a.order() - 1, 0));
  auto grad = cov_deriv_form(geom, a);
  const int order = a.order() - 1;
  JetMat zeta = zeta_comps(geom, a.p, order, a.scale);
  FormJet out = FormJet::zero(a.p, a.n, a.k - 1, a.w - 2.0, a.scale, order);
  const auto& tj = combinations(a.n, a.k - 1);
  std::vector<int> merged;
  for (size_t j = 0; j < tj.size(); ++j) {
    Jet acc(a.n, order);
    for (int b = 0; b < a.n; ++b)
      for (int c = 0; c < a.n; ++c) {
        int one[1] = {c};
        int sign = merge_sign(std::span<const int>(one, 1), tj[j], merged);
        if (sign == 0) continue;
        acc -= double(sign) * (zeta(b, c) * grad[b].comp[comb_rank(a.n, merged)]);
      }
    out.comp[j] = acc;
  }
  return out;
}

FormJet lie_derivative_weighted(const Geometry& geom, const VecJet& X, const FormJet& a) {
  const int n = a.n, k = a.k;
  auto grad = cov_deriv_form(geom, a);
  const int order = a.order() - 1;
  JetTen3 gam = geom.christoffel(a.p, order, a.scale);
  // grad_c X^b
  JetMat dX(n, Jet(n, order));
  for (int c = 0; c < n; ++c)
    for (int b = 0; b < n; ++b) {
      Jet v = partial(X.comp[b], c);
      for (int e = 0; e < n; ++e) v += mul_at(gam(b, c, e), X.comp[e], order);
      dX(c, b) = v;
    }
  FormJet out = FormJet::zero(a.p, n, k, a.w + X.w, a.scale, order);
  const auto& tk = combinations(n, k);
  std::vector<int> rest(k);
  for (size_t i = 0; i < tk.size(); ++i) {
    Jet v(n, order);
    for (int b = 0; b < n; ++b) v += mul_at(X.comp[b], grad[b].comp[i], order);
    // k (grad_[a1 X^b) a_{|b| a2..ak]} expands over the tuple slots
    for (int s = 0; s < k; ++s) {
      for (int b = 0; b < n; ++b) {
        std::copy(tk[i].begin(), tk[i].end(), rest.begin());
        rest[s] = b;
        int sign = sort_sign(std::span<int>(rest.data(), k));
        if (sign == 0) continue;
        v += double(sign) * (dX(tk[i][s], b) * a.comp[comb_rank(n, std::span<const int>(rest.data(), k))].truncated(order));
      }
    }
    out.comp[i] = v;
  }
  return out;
}

FormJet base_weitzenbock_residual(const Geometry& geom, const FormJet& a) {
  const int n = a.n, k = a.k;
  const int order = a.order() - 2;
  if (order < 0) throw OrderExhausted("weitzenbock residual needs order-2 jets");
  // {d,delta} a
  FormJet dd = codifferential_base(geom, cov_ext_d(geom, a));
  FormJet sd = (k >= 1) ? cov_ext_d(geom, codifferential_base(geom, a))
                        : FormJet::zero(a.p, n, k, a.w - 2.0, a.scale, order);
  FormJet res = dd + sd;
  // + zeta^{bc} grad_b grad_c a  (tensor Hessian)
  auto grad = cov_deriv_form(geom, a);
  JetTen3 gam = geom.christoffel(a.p, order, a.scale);
  JetMat zeta = zeta_comps(geom, a.p, order, a.scale);
  const auto& tk = combinations(n, k);
  for (size_t i = 0; i < tk.size(); ++i) {
    Jet acc(n, order);
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        if (zeta(b, c).max_abs() == 0.0) continue;
        // grad_b (grad a)_{c, i} with the extra -Gamma^e_bc (grad a)_{e, i}
        Jet h = partial(grad[c].comp[i], b);
        for (int e = 0; e < n; ++e) h -= mul_at(gam(e, b, c), grad[e].comp[i], order);
        std::vector<int> tup(k);
        for (int s = 0; s < k; ++s) {
          for (int e = 0; e < n; ++e) {
            std::copy(tk[i].begin(), tk[i].end(), tup.begin());
            tup[s] = e;
            int sign = sort_sign(std::span<int>(tup.data(), k));
            if (sign == 0) continue;
            h -= double(sign) * mul_at(gam(e, b, tk[i][s]), grad[c].comp[comb_rank(n, tup)], order);
          }
        }
        acc += zeta(b, c) * h;
      }
    res.comp[i] += acc;
  }
  // minus the two curvature sums
  CurvaturePack cur = geom.curvature(a.p, order, a.scale);
  std::vector<int> tup(k);
  for (size_t i = 0; i < tk.size(); ++i) {
    Jet acc(n, order);
    for (int s = 0; s < k; ++s) {
      // sum_i zeta^{ab} R_{a_i a}^c_b xi_{..c..}
      for (int c = 0; c < n; ++c) {
        Jet coeff(n, order);
        for (int aa = 0; aa < n; ++aa)
          for (int bb = 0; bb < n; ++bb)
            coeff += zeta(aa, bb) * cur.riemann(tk[i][s], aa, c, bb);
        std::copy(tk[i].begin(), tk[i].end(), tup.begin());
        tup[s] = c;
        int sign = sort_sign(std::span<int>(tup.data(), k));
        if (sign == 0) continue;
        acc += double(sign) * (coeff * a.comp[comb_rank(n, tup)].truncated(order));
      }
      // sum_{j != i} zeta^{ab} R_{a_i a}^c_{a_j} xi_{.. c at j .. b at i ..}
      for (int t = 0; t < k; ++t) {
        if (t == s) continue;
        for (int c = 0; c < n; ++c)
          for (int bb = 0; bb < n; ++bb) {
            Jet coeff(n, order);
            for (int aa = 0; aa < n; ++aa)
              coeff += zeta(aa, bb) * cur.riemann(tk[i][s], aa, c, tk[i][t]);
            std::copy(tk[i].begin(), tk[i].end(), tup.begin());
            tup[t] = c;
            tup[s] = bb;
            int sign = sort_sign(std::span<int>(tup.data(), k));
            if (sign == 0) continue;
            acc += double(sign) * (coeff * a.comp[comb_rank(n, tup)].truncated(order));
          }
      }
    }
    res.comp[i] -= acc;
  }
  return res;
}

double rel_residual(const FormJet& diff, double ref_norm) {
  return diff.max_abs() / (1.0 + ref_norm);
}

}  // namespace ptrac
