#include "ptrac/jet.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace ptrac {

namespace {

void enumerate(int dim, int order, int axis, std::array<int, kMaxJetDim>& cur, int used,
               std::vector<std::array<int, kMaxJetDim>>& out) {
  if (axis == dim) {
    out.push_back(cur);
    return;
  }
  for (int e = 0; e <= order - used; ++e) {
    cur[axis] = e;
    enumerate(dim, order, axis + 1, cur, used + e, out);
    cur[axis] = 0;
  }
}

}  // namespace

MultiIndexSet::MultiIndexSet(int dim, int order) : dim_(dim), order_(order) {
  std::array<int, kMaxJetDim> cur{};
  enumerate(dim, order, 0, cur, 0, idx_);
  // graded lexicographic
  std::sort(idx_.begin(), idx_.end(), [&](const auto& a, const auto& b) {
    int da = 0, db = 0;
    for (int i = 0; i < dim; ++i) da += a[i], db += b[i];
    if (da != db) return da < db;
    return a < b;
  });
  deg_.resize(idx_.size());
  for (size_t i = 0; i < idx_.size(); ++i) {
    int d = 0;
    for (int k = 0; k < dim; ++k) d += idx_[i][k];
    deg_[i] = d;
  }
  mul_.assign(idx_.size() * idx_.size(), -1);
  std::array<int, kMaxJetDim> s{};
  for (size_t i = 0; i < idx_.size(); ++i)
    for (size_t j = 0; j < idx_.size(); ++j) {
      if (deg_[i] + deg_[j] > order) continue;
      for (int k = 0; k < dim; ++k) s[k] = idx_[i][k] + idx_[j][k];
      mul_[i * idx_.size() + j] = rank({s.data(), static_cast<size_t>(dim)});
    }
}

int MultiIndexSet::rank(std::span<const int> exps) const {
  int deg = 0;
  for (int e : exps) deg += e;
  if (deg > order_) return -1;
  // binary search within the graded lex order
  std::array<int, kMaxJetDim> key{};
  std::copy(exps.begin(), exps.end(), key.begin());
  auto cmp = [&](const std::array<int, kMaxJetDim>& a, const std::array<int, kMaxJetDim>& b) {
    int da = 0, db = 0;
    for (int i = 0; i < dim_; ++i) da += a[i], db += b[i];
    if (da != db) return da < db;
    return a < b;
  };
  auto it = std::lower_bound(idx_.begin(), idx_.end(), key, cmp);
  if (it == idx_.end() || *it != key) throw StructuralError("multi-index not in table");
  return static_cast<int>(it - idx_.begin());
}

const MultiIndexSet& MultiIndexSet::get(int dim, int order) {
  if (dim < 1 || dim > kMaxJetDim) throw StructuralError("jet dimension out of range");
  if (order < 0 || order > kMaxJetOrder) throw StructuralError("jet order out of range");
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<MultiIndexSet>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{dim, order}];
  if (!slot) slot.reset(new MultiIndexSet(dim, order));
  return *slot;
}

Jet::Jet(int dim, int order) : dim_(dim), order_(order) {
  c_ = Eigen::VectorXcd::Zero(MultiIndexSet::get(dim, order).size());
}

Jet Jet::constant(int dim, int order, cplx v) {
  Jet j(dim, order);
  j.c_[0] = v;
  return j;
}

Jet Jet::coordinate(int dim, int order, int axis, double value) {
  Jet j(dim, order);
  j.c_[0] = value;
  if (order >= 1) {
    std::array<int, kMaxJetDim> e{};
    e[axis] = 1;
    j.c_[j.table().rank({e.data(), static_cast<size_t>(dim)})] = 1.0;
  }
  return j;
}

cplx Jet::coeff(std::span<const int> exps) const {
  int r = table().rank(exps);
  if (r < 0) throw StructuralError("coefficient beyond jet order");
  return c_[r];
}

Jet Jet::truncated(int new_order) const {
  if (new_order > order_) throw StructuralError("cannot extend a jet");
  if (new_order == order_) return *this;
  Jet out(dim_, new_order);
  const auto& t = table();
  const auto& to = out.table();
  for (int i = 0; i < to.size(); ++i) out.c_[i] = c_[t.rank(to.exponents(i))];
  return out;
}

void Jet::check_match(const Jet& o) const {
  if (dim_ != o.dim_ || order_ != o.order_) throw StructuralError("jet dim/order mismatch");
}

Jet Jet::operator-() const {
  Jet out = *this;
  out.c_ = -out.c_;
  return out;
}

Jet& Jet::operator+=(const Jet& o) {
  check_match(o);
  c_ += o.c_;
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  check_match(o);
  c_ -= o.c_;
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  a.check_match(b);
  const auto& t = a.table();
  Jet out(a.dim_, a.order_);
  const int n = t.size();
  for (int i = 0; i < n; ++i) {
    const cplx ai = a.c_[i];
    if (ai == 0.0) continue;
    for (int j = 0; j < n; ++j) {
      int k = t.sum(i, j);
      if (k >= 0) out.c_[k] += ai * b.c_[j];
    }
  }
  return out;
}

Jet operator*(const Jet& a, cplx s) {
  Jet out = a;
  out.c_ *= s;
  return out;
}

Jet operator+(const Jet& a, cplx s) {
  Jet out = a;
  out.c_[0] += s;
  return out;
}

Jet partial(const Jet& a, int axis) {
  if (a.order() < 1) throw OrderExhausted("partial of an order-0 jet");
  Jet out(a.dim(), a.order() - 1);
  const auto& to = out.table();
  const auto& ta = a.table();
  std::array<int, kMaxJetDim> e{};
  for (int i = 0; i < to.size(); ++i) {
    auto exps = to.exponents(i);
    std::copy(exps.begin(), exps.end(), e.begin());
    e[axis] += 1;
    int src = ta.rank({e.data(), static_cast<size_t>(a.dim())});
    out.coeffs()[i] = a.coeffs()[src] * double(e[axis]);
  }
  return out;
}

Jet compose_univariate(std::span<const cplx> series, const Jet& g) {
  if (static_cast<int>(series.size()) < g.order() + 1)
    throw StructuralError("composition series shorter than jet order");
  // Horner in the nilpotent part N = g - g(p).
  Jet n = g;
  n.coeffs()[0] = 0.0;
  Jet acc = Jet::constant(g.dim(), g.order(), series[g.order()]);
  for (int k = g.order() - 1; k >= 0; --k) acc = acc * n + series[k];
  return acc;
}

namespace {

Jet compose_with(const Jet& g, cplx (*dk)(cplx v, int k)) {
  std::vector<cplx> s(g.order() + 1);
  for (int k = 0; k <= g.order(); ++k) s[k] = dk(g.value(), k);
  return compose_univariate(s, g);
}

double factorial(int k) {
  double f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

Jet reciprocal(const Jet& g) {
  if (g.value() == 0.0) throw DomainError("reciprocal of a jet with zero value");
  return compose_with(g, [](cplx v, int k) {
    cplx c = 1.0 / v;
    for (int i = 0; i < k; ++i) c *= -1.0 / v;
    return c;
  });
}

Jet sqrt(const Jet& g) {
  if (g.value() == 0.0) throw DomainError("sqrt of a jet with zero value");
  return pow(g, 0.5);
}

Jet exp(const Jet& g) {
  return compose_with(g, [](cplx v, int k) { return std::exp(v) / factorial(k); });
}

Jet log(const Jet& g) {
  if (g.value() == 0.0) throw DomainError("log of a jet with zero value");
  return compose_with(g, [](cplx v, int k) {
    if (k == 0) return std::log(v);
    cplx c = std::pow(v, -k) / double(k);
    return (k % 2 == 0) ? -c : c;
  });
}

Jet sin(const Jet& g) {
  return compose_with(g, [](cplx v, int k) {
    static const cplx tab[4] = {cplx(0), cplx(1), cplx(0), cplx(-1)};
    return (tab[k % 4] * std::cos(v) + tab[(k + 1) % 4] * std::sin(v)) / factorial(k);
  });
}

Jet cos(const Jet& g) {
  return compose_with(g, [](cplx v, int k) {
    static const cplx tab[4] = {cplx(0), cplx(1), cplx(0), cplx(-1)};
    return (tab[(k + 1) % 4] * std::cos(v) - tab[k % 4] * std::sin(v)) / factorial(k);
  });
}

Jet pow(const Jet& g, cplx w) {
  if (w == cplx(std::round(w.real()), 0) && w.real() >= 0 && w.real() <= 8) {
    int e = static_cast<int>(std::round(w.real()));
    Jet acc = Jet::constant(g.dim(), g.order(), 1.0);
    for (int i = 0; i < e; ++i) acc = acc * g;
    return acc;
  }
  if (g.value() == 0.0) throw DomainError("pow of a jet with zero value");
  std::vector<cplx> s(g.order() + 1);
  cplx binom = 1.0;
  for (int k = 0; k <= g.order(); ++k) {
    s[k] = binom * std::pow(g.value(), w - cplx(k));
    binom *= (w - cplx(k)) / cplx(k + 1);
  }
  return compose_univariate(s, g);
}

}  // namespace ptrac
