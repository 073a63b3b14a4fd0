#pragma once

// Test-only oracle: materializes cotractor forms as explicit component
// arrays over a tractor index A in {0..n} (0 = the Y-direction of the
// splitting, a+1 = the chart directions) and implements the Thomas-D
// calculus directly on those arrays.  Entirely independent of the slot
// formulas in the library; used to cross-check them.

#include <vector>

#include "ptrac/tractor.hpp"

namespace ptrac::oracle {

struct TracArray {
  int n = 0;  // chart dimension; tractor index runs over n+1 values
  int k = 0;
  cplx w = 0.0;
  int scale = Geometry::kLC;
  Point p;
  std::vector<Jet> v;  // size (n+1)^k

  static TracArray zero(const Point& p, int n, int k, cplx w, int scale, int order) {
    TracArray a;
    a.n = n;
    a.k = k;
    a.w = w;
    a.scale = scale;
    a.p = p;
    size_t sz = 1;
    for (int i = 0; i < k; ++i) sz *= (n + 1);
    a.v.assign(sz, Jet(n, order));
    return a;
  }
  size_t flat(std::span<const int> idx) const {
    size_t f = 0;
    for (int i : idx) f = f * (n + 1) + i;
    return f;
  }
  int order() const { return v.empty() ? 0 : v[0].order(); }
  double max_abs() const { return ptrac::max_abs(v); }
};

/// Slot pair -> explicit antisymmetric array.
inline TracArray materialize(const TracJet& F) {
  TracArray a = TracArray::zero(F.p, F.n, F.k, F.w, F.scale, F.order());
  const int n = F.n, k = F.k;
  std::vector<int> idx(k, 0);
  std::vector<int> chart;
  for (size_t f = 0; f < a.v.size(); ++f) {
    size_t rem = f;
    for (int i = k - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(rem % (n + 1));
      rem /= (n + 1);
    }
    int zeros = 0, zero_pos = -1;
    for (int i = 0; i < k; ++i)
      if (idx[i] == 0) {
        ++zeros;
        zero_pos = i;
      }
    if (zeros >= 2) continue;
    if (zeros == 0) {
      if (!F.has_xi()) continue;
      chart.assign(k, 0);
      for (int i = 0; i < k; ++i) chart[i] = idx[i] - 1;
      int sign = sort_sign(std::span<int>(chart.data(), k));
      if (sign == 0) continue;
      a.v[f] = double(sign) * F.xi.comp[comb_rank(n, std::span<const int>(chart.data(), k))];
    } else {
      // F = sum_i (-1)^{i-1} mu_{(slots != i, in order)} Y_{A_i} Z...
      if (!F.has_mu()) continue;
      chart.clear();
      for (int i = 0; i < k; ++i)
        if (i != zero_pos) chart.push_back(idx[i] - 1);
      int sign = (zero_pos % 2 == 0) ? 1 : -1;
      int s2 = sort_sign(std::span<int>(chart.data(), chart.size()));
      if (s2 == 0) continue;
      a.v[f] = double(sign * s2) *
               F.mu.comp[comb_rank(n, std::span<const int>(chart.data(), chart.size()))];
    }
  }
  return a;
}

/// Array -> slot pair (assumes the array is in splitting form).
inline TracJet dematerialize(const TracArray& a) {
  TracJet F = TracJet::make(a.p, a.n, a.k, a.w, a.scale, a.order());
  const int n = a.n, k = a.k;
  if (F.has_xi()) {
    const auto& tk = combinations(n, k);
    std::vector<int> idx(k);
    for (size_t i = 0; i < tk.size(); ++i) {
      for (int t = 0; t < k; ++t) idx[t] = tk[i][t] + 1;
      F.xi.comp[i] = a.v[a.flat(idx)];
    }
  }
  if (F.has_mu()) {
    const auto& tm = combinations(n, k - 1);
    std::vector<int> idx(k);
    for (size_t i = 0; i < tm.size(); ++i) {
      idx[0] = 0;
      for (int t = 0; t < k - 1; ++t) idx[t + 1] = tm[i][t] + 1;
      F.mu.comp[i] = a.v[a.flat(idx)];
    }
  }
  return F;
}

/// Coupled tractor covariant derivative on arrays (new chart index first
/// in the return, as slot d of the vector).
inline std::vector<TracArray> trac_cov_deriv(const Geometry& geom, const TracArray& a) {
  const int n = a.n, k = a.k;
  const int order = a.order() - 1;
  JetTen3 gam = geom.christoffel(a.p, order, a.scale);
  JetMat P = geom.curvature(a.p, order, a.scale).schouten;
  std::vector<TracArray> out(n, TracArray::zero(a.p, n, k, a.w, a.scale, order));
  std::vector<int> idx(k);
  for (size_t f = 0; f < a.v.size(); ++f) {
    size_t rem = f;
    for (int i = k - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(rem % (n + 1));
      rem /= (n + 1);
    }
    for (int d = 0; d < n; ++d) {
      Jet val = partial(a.v[f], d);
      // connection action on each tractor slot:
      //   (grad_d U)_0     = d U_0 - U_{d+1}
      //   (grad_d U)_{b+1} = d U_{b+1} + P_{db} U_0 - Gamma^c_{db} U_{c+1}
      for (int s = 0; s < k; ++s) {
        std::vector<int> jdx = idx;
        if (idx[s] == 0) {
          jdx[s] = d + 1;
          val -= a.v[a.flat(jdx)].truncated(order);
        } else {
          int b = idx[s] - 1;
          jdx[s] = 0;
          val += P(d, b) * a.v[a.flat(jdx)].truncated(order);
          for (int c = 0; c < n; ++c) {
            jdx[s] = c + 1;
            val -= gam(c, d, b) * a.v[a.flat(jdx)].truncated(order);
          }
        }
      }
      out[d].v[f] = val;
    }
  }
  return out;
}

/// Thomas D: one extra (leading) tractor index, weight drops by one.
inline TracArray thomas_d(const Geometry& geom, const TracArray& a) {
  const int n = a.n, k = a.k;
  auto grad = trac_cov_deriv(geom, a);
  const int order = a.order() - 1;
  TracArray out = TracArray::zero(a.p, n, k + 1, a.w - 1.0, a.scale, order);
  // weight operator uses the *scale component* of the density factors only:
  // D_A = w Y_A + Z^a_A grad_a in the splitting of the declared scale.
  std::vector<int> idx(k + 1);
  for (size_t f = 0; f < out.v.size(); ++f) {
    size_t rem = f;
    for (int i = k; i >= 0; --i) {
      idx[i] = static_cast<int>(rem % (n + 1));
      rem /= (n + 1);
    }
    std::span<const int> rest(idx.data() + 1, static_cast<size_t>(k));
    size_t fr = a.flat(rest);
    if (idx[0] == 0)
      out.v[f] = a.w * a.v[fr].truncated(order);
    else
      out.v[f] = grad[idx[0] - 1].v[fr];
  }
  return out;
}

/// Full antisymmetrization scaled by (k+1): (k+1) T_{[A_0 .. A_k]}.
inline TracArray alt_scaled(const TracArray& a) {
  const int k = a.k, n = a.n;
  TracArray out = TracArray::zero(a.p, n, k, a.w, a.scale, a.order());
  std::vector<int> idx(k), perm(k);
  for (size_t f = 0; f < out.v.size(); ++f) {
    size_t rem = f;
    for (int i = k - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(rem % (n + 1));
      rem /= (n + 1);
    }
    Jet acc(n, a.order());
    for (int t = 0; t < k; ++t) perm[t] = t;
    double fact = 1;
    for (int t = 2; t <= k; ++t) fact *= t;
    do {
      int sg = 1;
      for (int x = 0; x < k; ++x)
        for (int y = x + 1; y < k; ++y)
          if (perm[x] > perm[y]) sg = -sg;
      std::vector<int> jdx(k);
      for (int t = 0; t < k; ++t) jdx[t] = idx[perm[t]];
      acc += double(sg) * a.v[a.flat(jdx)];
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.v[f] = (double(k) / fact) * acc;
  }
  return out;
}

/// d_ext via the defining formula (k+1) D_[A0 F A1..Ak].
inline TracJet d_ext_oracle(const Geometry& geom, const TracJet& F) {
  TracArray a = materialize(F);
  TracArray d = thomas_d(geom, a);
  return dematerialize(alt_scaled(d));
}

/// H as an (n+1)x(n+1) jet matrix of upper components.
inline std::vector<Jet> h_matrix(const Geometry& geom, const Point& p, int order, int scale) {
  const int n = geom.dim();
  BoundaryJets b = geom.boundary(p, order, scale);
  std::vector<Jet> H(static_cast<size_t>(n + 1) * (n + 1), Jet(n, order));
  H[0] = b.hxx.truncated(order);
  for (int a = 0; a < n; ++a) {
    H[static_cast<size_t>(0) * (n + 1) + a + 1] = b.T(a).truncated(order);
    H[static_cast<size_t>(a + 1) * (n + 1) + 0] = b.T(a).truncated(order);
    for (int c = 0; c < n; ++c)
      H[static_cast<size_t>(a + 1) * (n + 1) + c + 1] = b.zeta(a, c).truncated(order);
  }
  return H;
}

/// h(F,G) = (1/k!) H^{A1B1}..H^{AkBk} F G.
inline Jet h_pair_oracle(const Geometry& geom, const TracJet& Fj, const TracJet& Gj) {
  TracArray F = materialize(Fj), G = materialize(Gj);
  const int n = F.n, k = F.k;
  const int order = std::min(F.order(), G.order());
  auto H = h_matrix(geom, F.p, order, F.scale);
  auto hat = [&](int A, int B) { return H[static_cast<size_t>(A) * (n + 1) + B]; };
  Jet acc(n, order);
  std::vector<int> ia(k), ib(k);
  for (size_t fa = 0; fa < F.v.size(); ++fa) {
    if (F.v[fa].max_abs() == 0.0) continue;
    size_t rem = fa;
    for (int i = k - 1; i >= 0; --i) {
      ia[i] = static_cast<int>(rem % (n + 1));
      rem /= (n + 1);
    }
    for (size_t fb = 0; fb < G.v.size(); ++fb) {
      size_t rb = fb;
      for (int i = k - 1; i >= 0; --i) {
        ib[i] = static_cast<int>(rb % (n + 1));
        rb /= (n + 1);
      }
      Jet term = F.v[fa].truncated(order) * G.v[fb].truncated(order);
      for (int i = 0; i < k; ++i) term = term * hat(ia[i], ib[i]);
      acc += term;
    }
  }
  double fact = 1;
  for (int t = 2; t <= k; ++t) fact *= t;
  return (1.0 / fact) * acc;
}

/// Laplacian H^{AB} D_A D_B directly on arrays.
inline TracJet laplacian_oracle(const Geometry& geom, const TracJet& Fj) {
  TracArray F = materialize(Fj);
  TracArray d1 = thomas_d(geom, F);
  TracArray d2 = thomas_d(geom, d1);
  const int n = F.n, k = F.k;
  const int order = d2.order();
  auto H = h_matrix(geom, F.p, order, F.scale);
  auto hat = [&](int A, int B) { return H[static_cast<size_t>(A) * (n + 1) + B]; };
  TracArray out = TracArray::zero(F.p, n, k, F.w - 2.0, F.scale, order);
  size_t tail = out.v.size();
  for (size_t r = 0; r < tail; ++r) {
    Jet acc(n, order);
    for (int A = 0; A <= n; ++A)
      for (int B = 0; B <= n; ++B) {
        // d2 index order: (A, B, rest) with A the outer Thomas D
        size_t f = (static_cast<size_t>(A) * (n + 1) + B) * tail + r;
        acc += hat(A, B) * d2.v[f];
      }
    out.v[r] = acc;
  }
  return dematerialize(out);
}

/// V^A F_{A...} for a degree-1 cotractor U raised with H.
inline TracJet contract_oracle(const Geometry& geom, const TracJet& Uj, const TracJet& Fj) {
  TracArray U = materialize(Uj);
  TracArray F = materialize(Fj);
  const int n = F.n, k = F.k;
  const int order = std::min(U.order(), F.order());
  auto H = h_matrix(geom, F.p, order, F.scale);
  auto hat = [&](int A, int B) { return H[static_cast<size_t>(A) * (n + 1) + B]; };
  TracArray out = TracArray::zero(F.p, n, k - 1, F.w + U.w, F.scale, order);
  size_t tail = out.v.size();
  for (size_t r = 0; r < tail; ++r) {
    Jet acc(n, order);
    for (int A = 0; A <= n; ++A) {
      Jet up(n, order);
      for (int B = 0; B <= n; ++B) up += hat(A, B) * U.v[B].truncated(order);
      acc += up * F.v[static_cast<size_t>(A) * tail + r].truncated(order);
    }
    out.v[r] = acc;
  }
  return dematerialize(out);
}

/// Array wedge (shuffle convention), for cross-checking tractor_wedge.
inline TracJet wedge_oracle(const TracJet& Fj, const TracJet& Gj) {
  TracArray F = materialize(Fj), G = materialize(Gj);
  const int n = F.n, kf = F.k, kg = G.k;
  const int order = std::min(F.order(), G.order());
  TracArray out = TracArray::zero(F.p, n, kf + kg, F.w + G.w, F.scale, order);
  const int k = kf + kg;
  std::vector<int> idx(k), pf(kf), pg(kg), sel(k);
  for (size_t f = 0; f < out.v.size(); ++f) {
    size_t rem = f;
    for (int i = k - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(rem % (n + 1));
      rem /= (n + 1);
    }
    // sum over shuffles: choose which positions feed F
    Jet acc(n, order);
    const auto& choice = combinations(k, kf);
    for (const auto& C : choice) {
      int csign = 1;
      // sign of the shuffle permutation (C, complement)
      std::vector<int> permpos(C.begin(), C.end());
      for (int i = 0, j = 0; i < k; ++i) {
        bool in = std::find(C.begin(), C.end(), i) != C.end();
        if (!in) permpos.push_back(i);
        (void)j;
      }
      // parity of permpos as a permutation of 0..k-1
      {
        std::vector<int> tmp = permpos;
        csign = sort_sign(std::span<int>(tmp.data(), tmp.size()));
      }
      for (int i = 0; i < kf; ++i) pf[i] = idx[permpos[i]];
      for (int i = 0; i < kg; ++i) pg[i] = idx[permpos[kf + i]];
      acc += double(csign) * (F.v[F.flat(pf)].truncated(order) * G.v[G.flat(pg)].truncated(order));
    }
    out.v[f] = acc;
  }
  return dematerialize(out);
}

inline double compare(const TracJet& a, const TracJet& b) {
  TracJet d = a;
  d -= b;
  return rel_residual(d, a.max_abs() + b.max_abs());
}

}  // namespace ptrac::oracle
