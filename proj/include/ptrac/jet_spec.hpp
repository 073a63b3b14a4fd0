#pragma once

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ptrac/jet.hpp"

namespace ptrac {

/// Finite expression tree evaluable to a Jet of any requested order at any
/// chart point.  Doubles as the parse target of the JSON metric-component
/// grammar (op nodes add/mul/pow/const/coord/sin/cos/exp).
class JetSpec {
 public:
  enum class Kind { Const, Coord, Monomial, Trig, Sum, Product, Scale, Pow, Sin, Cos, Exp, Log };

  JetSpec() : kind_(Kind::Const), coef_(0.0) {}

  static JetSpec constant(cplx v);
  static JetSpec coord(int axis);
  /// prod_i x_i^{e_i}
  static JetSpec monomial(std::vector<int> exponents, cplx coef = 1.0);
  /// cos(freq . x + phase)
  static JetSpec trig(std::vector<double> freq, double phase);
  static JetSpec sum(std::vector<JetSpec> kids);
  static JetSpec product(std::vector<JetSpec> kids);
  static JetSpec scaled(cplx c, JetSpec kid);
  static JetSpec pow_of(JetSpec base, double expo);
  static JetSpec sin_of(JetSpec kid);
  static JetSpec cos_of(JetSpec kid);
  static JetSpec exp_of(JetSpec kid);
  static JetSpec log_of(JetSpec kid);

  Jet eval(const Point& p, int order) const;
  cplx operator()(const Point& p) const { return eval(p, 0).value(); }

  JetSpec operator+(const JetSpec& o) const { return sum({*this, o}); }
  JetSpec operator*(const JetSpec& o) const { return product({*this, o}); }

  /// Parse the documented JSON grammar; throws StructuralError on bad input.
  static JetSpec from_json(const std::string& text);
  static JetSpec from_json_value(const void* nlohmann_json_value);

 private:
  Kind kind_;
  cplx coef_ = 1.0;
  int axis_ = 0;
  double expo_ = 1.0;
  double phase_ = 0.0;
  std::vector<int> mono_;
  std::vector<double> freq_;
  std::vector<JetSpec> kids_;
};

/// Deterministic random degree-<=deg polynomial-plus-trig scalar field.
JetSpec random_poly_trig(std::mt19937_64& rng, int dim, int deg, int terms, bool complex_coefs = true);

/// Scalar field = jet-evaluable function of the chart point.
using ScalarField = std::function<Jet(const Point&, int order)>;

inline ScalarField as_field(JetSpec s) {
  return [s = std::move(s)](const Point& p, int order) { return s.eval(p, order); };
}

}  // namespace ptrac
