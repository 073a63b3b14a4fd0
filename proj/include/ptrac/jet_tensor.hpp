#pragma once

#include <vector>

#include "ptrac/jet.hpp"

namespace ptrac {

/// Dense rank-1..4 holders of jets over a single chart dimension n.
/// The geometry code manipulates these with explicit index loops.
struct JetVec {
  JetVec() = default;
  JetVec(int n_, const Jet& fill) : n(n_), v(n_, fill) {}
  int n = 0;
  std::vector<Jet> v;
  Jet& operator()(int a) { return v[a]; }
  const Jet& operator()(int a) const { return v[a]; }
};

struct JetMat {
  JetMat() = default;
  JetMat(int n_, const Jet& fill) : n(n_), v(static_cast<size_t>(n_) * n_, fill) {}
  int n = 0;
  std::vector<Jet> v;
  Jet& operator()(int a, int b) { return v[static_cast<size_t>(a) * n + b]; }
  const Jet& operator()(int a, int b) const { return v[static_cast<size_t>(a) * n + b]; }
};

struct JetTen3 {
  JetTen3() = default;
  JetTen3(int n_, const Jet& fill) : n(n_), v(static_cast<size_t>(n_) * n_ * n_, fill) {}
  int n = 0;
  std::vector<Jet> v;
  Jet& operator()(int a, int b, int c) { return v[(static_cast<size_t>(a) * n + b) * n + c]; }
  const Jet& operator()(int a, int b, int c) const { return v[(static_cast<size_t>(a) * n + b) * n + c]; }
};

struct JetTen4 {
  JetTen4() = default;
  JetTen4(int n_, const Jet& fill) : n(n_), v(static_cast<size_t>(n_) * n_ * n_ * n_, fill) {}
  int n = 0;
  std::vector<Jet> v;
  Jet& operator()(int a, int b, int c, int d) {
    return v[((static_cast<size_t>(a) * n + b) * n + c) * n + d];
  }
  const Jet& operator()(int a, int b, int c, int d) const {
    return v[((static_cast<size_t>(a) * n + b) * n + c) * n + d];
  }
};

/// Gauss-Jordan inverse with jets as scalars; pivots on coefficient value.
JetMat inverse(const JetMat& m);
Jet determinant(const JetMat& m);

inline double max_abs(const std::vector<Jet>& v) {
  double r = 0;
  for (const auto& j : v) r = std::max(r, j.max_abs());
  return r;
}

}  // namespace ptrac
