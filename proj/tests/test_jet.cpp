#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ptrac/jet.hpp"
#include "ptrac/jet_spec.hpp"

using namespace ptrac;

namespace {
double dist(cplx a, cplx b) { return std::abs(a - b); }
}  // namespace

TEST_CASE("addition") {
  auto a = Jet::constant(1, 0, 2.0);
  auto b = Jet::constant(1, 0, 3.0);
  CHECK(dist((a + b).value(), 5.0) == 0.0);

  // identity
  auto z = Jet(2, 2);
  auto x = Jet::coordinate(2, 2, 0, 1.5);
  auto s = x + z;
  CHECK(dist(s.value(), x.value()) == 0.0);
  CHECK(dist(s.coeff({1, 0}), 1.0) == 0.0);

  // jet of x plus jet of y: second-order coefficients all vanish
  auto y = Jet::coordinate(2, 2, 1, -0.5);
  auto xy = x + y;
  CHECK(dist(xy.value(), 1.0) == 0.0);
  CHECK(dist(xy.coeff({1, 0}), 1.0) == 0.0);
  CHECK(dist(xy.coeff({0, 1}), 1.0) == 0.0);
  CHECK(dist(xy.coeff({2, 0}), 0.0) == 0.0);
  CHECK(dist(xy.coeff({1, 1}), 0.0) == 0.0);
  CHECK(dist(xy.coeff({0, 2}), 0.0) == 0.0);

  CHECK_THROWS_AS(Jet(1, 1) + Jet(2, 1), StructuralError);
  CHECK_THROWS_AS(Jet(2, 1) + Jet(2, 2), StructuralError);
}

TEST_CASE("multiplication") {
  // x*x at x=1: value 1, f' = 2, f''/2 = 1
  auto x = Jet::coordinate(1, 2, 0, 1.0);
  auto sq = x * x;
  CHECK(dist(sq.value(), 1.0) == 0.0);
  CHECK(dist(sq.coeff({1}), 2.0) == 0.0);
  CHECK(dist(sq.coeff({2}), 1.0) == 0.0);

  auto one = Jet::constant(1, 2, 1.0);
  auto id = sq * one;
  CHECK((id.coeffs() - sq.coeffs()).cwiseAbs().maxCoeff() == 0.0);

  // sin(x) cos(x) == sin(2x)/2 through order 3 at x = 0.3
  auto t = Jet::coordinate(1, 3, 0, 0.3);
  auto lhs = sin(t) * cos(t);
  auto rhs = 0.5 * sin(2.0 * t);
  CHECK((lhs.coeffs() - rhs.coeffs()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("univariate composition") {
  // 1/(1+x) at x=0, order 2: 1, -1, 1
  auto x = Jet::coordinate(1, 2, 0, 0.0);
  auto r = reciprocal(1.0 + x);
  CHECK(dist(r.coeff({0}), 1.0) < 1e-15);
  CHECK(dist(r.coeff({1}), -1.0) < 1e-15);
  CHECK(dist(r.coeff({2}), 1.0) < 1e-15);

  auto four = Jet::constant(3, 1, 4.0);
  CHECK(dist(sqrt(four).value(), 2.0) < 1e-15);

  auto e = exp(Jet::coordinate(1, 3, 0, 0.0));
  CHECK(dist(e.coeff({0}), 1.0) < 1e-15);
  CHECK(dist(e.coeff({1}), 1.0) < 1e-15);
  CHECK(dist(e.coeff({2}), 0.5) < 1e-15);
  CHECK(dist(e.coeff({3}), 1.0 / 6.0) < 1e-15);

  CHECK_THROWS_AS(reciprocal(Jet::coordinate(1, 2, 0, 0.0)), DomainError);
}

TEST_CASE("partial derivatives") {
  auto x = Jet::coordinate(1, 2, 0, 3.0);
  auto d = partial(x * x, 0);
  CHECK(dist(d.value(), 6.0) < 1e-14);

  auto c = partial(Jet::constant(2, 1, 7.0), 1);
  CHECK(c.max_abs() == 0.0);

  auto xx = Jet::coordinate(2, 2, 0, 1.2);
  auto yy = Jet::coordinate(2, 2, 1, -0.4);
  auto m = partial(partial(xx * yy, 0), 1);
  CHECK(dist(m.value(), 1.0) < 1e-14);

  CHECK_THROWS_AS(partial(Jet::constant(1, 0, 1.0), 0), OrderExhausted);
}

TEST_CASE("mixed partials commute") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = random_poly_trig(rng, 3, 3, 4);
    Point p(3);
    p << 0.4, -0.2, 0.9;
    auto j = s.eval(p, 3);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        auto a = partial(partial(j, i), k);
        auto b = partial(partial(j, k), i);
        CHECK((a.coeffs() - b.coeffs()).cwiseAbs().maxCoeff() < 1e-14);
      }
  }
}

TEST_CASE("product rule on random spec pairs") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    auto f = random_poly_trig(rng, 2, 3, 3);
    auto g = random_poly_trig(rng, 2, 3, 3);
    Point p(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    p << u(rng), u(rng);
    auto jf = f.eval(p, 3);
    auto jg = g.eval(p, 3);
    auto prod = (f * g).eval(p, 3);
    auto ref = jf * jg;
    double scale = 1.0 + ref.max_abs();
    CHECK((prod.coeffs() - ref.coeffs()).cwiseAbs().maxCoeff() / scale < 1e-12);
  }
}

TEST_CASE("chain rule vs finite differences") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 10; ++trial) {
    auto f = random_poly_trig(rng, 2, 2, 3, false);
    // compose through exp to exercise Faa di Bruno
    auto g = JetSpec::exp_of(f);
    Point p(2);
    p << 0.3, 0.1;
    auto j = g.eval(p, 1);
    const double h = 1e-5;
    for (int axis = 0; axis < 2; ++axis) {
      Point pp = p, pm = p;
      pp[axis] += h;
      pm[axis] -= h;
      cplx fd = (g.eval(pp, 0).value() - g.eval(pm, 0).value()) / (2 * h);
      std::vector<int> e(2, 0);
      e[axis] = 1;
      cplx an = j.coeff(std::span<const int>(e.data(), 2));
      CHECK(dist(fd, an) / (1.0 + std::abs(an)) < 1e-6);
    }
  }
}

TEST_CASE("json spec grammar") {
  auto s = JetSpec::from_json(R"({"op":"add","args":[
      {"op":"mul","args":[{"op":"coord","index":0},{"op":"coord","index":0}]},
      {"op":"sin","arg":{"op":"coord","index":1}},
      {"op":"pow","base":{"op":"const","value":2.0},"exponent":3.0}]})");
  Point p(2);
  p << 2.0, 0.0;
  CHECK(dist(s.eval(p, 0).value(), 12.0) < 1e-14);
  CHECK_THROWS_AS(JetSpec::from_json(R"({"op":"nope"})"), StructuralError);
}
