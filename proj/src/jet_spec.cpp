#include "ptrac/jet_spec.hpp"

#include <json.hpp>

namespace ptrac {

JetSpec JetSpec::constant(cplx v) {
  JetSpec s;
  s.kind_ = Kind::Const;
  s.coef_ = v;
  return s;
}

JetSpec JetSpec::coord(int axis) {
  JetSpec s;
  s.kind_ = Kind::Coord;
  s.axis_ = axis;
  return s;
}

JetSpec JetSpec::monomial(std::vector<int> exponents, cplx coef) {
  JetSpec s;
  s.kind_ = Kind::Monomial;
  s.mono_ = std::move(exponents);
  s.coef_ = coef;
  return s;
}

JetSpec JetSpec::trig(std::vector<double> freq, double phase) {
  JetSpec s;
  s.kind_ = Kind::Trig;
  s.freq_ = std::move(freq);
  s.phase_ = phase;
  return s;
}

JetSpec JetSpec::sum(std::vector<JetSpec> kids) {
  JetSpec s;
  s.kind_ = Kind::Sum;
  s.kids_ = std::move(kids);
  return s;
}

JetSpec JetSpec::product(std::vector<JetSpec> kids) {
  JetSpec s;
  s.kind_ = Kind::Product;
  s.kids_ = std::move(kids);
  return s;
}

JetSpec JetSpec::scaled(cplx c, JetSpec kid) {
  JetSpec s;
  s.kind_ = Kind::Scale;
  s.coef_ = c;
  s.kids_.push_back(std::move(kid));
  return s;
}

JetSpec JetSpec::pow_of(JetSpec base, double expo) {
  JetSpec s;
  s.kind_ = Kind::Pow;
  s.expo_ = expo;
  s.kids_.push_back(std::move(base));
  return s;
}

#define PTRAC_UNARY(NAME, KIND)            \
  JetSpec JetSpec::NAME(JetSpec kid) {     \
    JetSpec s;                             \
    s.kind_ = Kind::KIND;                  \
    s.kids_.push_back(std::move(kid));     \
    return s;                              \
  }
PTRAC_UNARY(sin_of, Sin)
PTRAC_UNARY(cos_of, Cos)
PTRAC_UNARY(exp_of, Exp)
PTRAC_UNARY(log_of, Log)
#undef PTRAC_UNARY

Jet JetSpec::eval(const Point& p, int order) const {
  const int dim = static_cast<int>(p.size());
  switch (kind_) {
    case Kind::Const:
      return Jet::constant(dim, order, coef_);
    case Kind::Coord:
      return Jet::coordinate(dim, order, axis_, p[axis_]);
    case Kind::Monomial: {
      Jet acc = Jet::constant(dim, order, coef_);
      for (size_t i = 0; i < mono_.size(); ++i)
        for (int e = 0; e < mono_[i]; ++e) acc = acc * Jet::coordinate(dim, order, static_cast<int>(i), p[i]);
      return acc;
    }
    case Kind::Trig: {
      Jet arg = Jet::constant(dim, order, phase_);
      for (size_t i = 0; i < freq_.size(); ++i)
        if (freq_[i] != 0.0) arg += freq_[i] * Jet::coordinate(dim, order, static_cast<int>(i), p[i]);
      return cos(arg);
    }
    case Kind::Sum: {
      Jet acc(dim, order);
      for (const auto& k : kids_) acc += k.eval(p, order);
      return acc;
    }
    case Kind::Product: {
      Jet acc = Jet::constant(dim, order, 1.0);
      for (const auto& k : kids_) acc = acc * k.eval(p, order);
      return acc;
    }
    case Kind::Scale:
      return coef_ * kids_[0].eval(p, order);
    case Kind::Pow:
      return pow(kids_[0].eval(p, order), expo_);
    case Kind::Sin:
      return sin(kids_[0].eval(p, order));
    case Kind::Cos:
      return cos(kids_[0].eval(p, order));
    case Kind::Exp:
      return exp(kids_[0].eval(p, order));
    case Kind::Log:
      return log(kids_[0].eval(p, order));
  }
  throw StructuralError("corrupt JetSpec");
}

namespace {

JetSpec parse(const nlohmann::json& j) {
  if (j.is_number()) return JetSpec::constant(j.get<double>());
  if (!j.is_object() || !j.contains("op")) throw StructuralError("spec node must be a number or an op object");
  const std::string op = j.at("op").get<std::string>();
  auto args = [&]() {
    std::vector<JetSpec> kids;
    for (const auto& a : j.at("args")) kids.push_back(parse(a));
    return kids;
  };
  if (op == "const") return JetSpec::constant(j.at("value").get<double>());
  if (op == "coord") return JetSpec::coord(j.at("index").get<int>());
  if (op == "add") return JetSpec::sum(args());
  if (op == "mul") return JetSpec::product(args());
  if (op == "pow") return JetSpec::pow_of(parse(j.at("base")), j.at("exponent").get<double>());
  if (op == "sin") return JetSpec::sin_of(parse(j.at("arg")));
  if (op == "cos") return JetSpec::cos_of(parse(j.at("arg")));
  if (op == "exp") return JetSpec::exp_of(parse(j.at("arg")));
  throw StructuralError("unknown spec op: " + op);
}

}  // namespace

JetSpec JetSpec::from_json(const std::string& text) {
  return parse(nlohmann::json::parse(text));
}

JetSpec JetSpec::from_json_value(const void* v) {
  return parse(*static_cast<const nlohmann::json*>(v));
}

JetSpec random_poly_trig(std::mt19937_64& rng, int dim, int deg, int terms, bool complex_coefs) {
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::uniform_int_distribution<int> pick_deg(0, deg);
  std::uniform_int_distribution<int> pick_axis(0, dim - 1);
  std::vector<JetSpec> parts;
  for (int t = 0; t < terms; ++t) {
    cplx c(amp(rng), complex_coefs ? amp(rng) : 0.0);
    std::vector<int> e(dim, 0);
    int total = pick_deg(rng);
    for (int i = 0; i < total; ++i) e[pick_axis(rng)] += 1;
    parts.push_back(JetSpec::monomial(std::move(e), c));
  }
  // one bounded-frequency trig term keeps fields wavy without wrecking scales
  std::vector<double> freq(dim, 0.0);
  freq[pick_axis(rng)] = 0.5 + 0.5 * std::abs(amp(rng));
  parts.push_back(JetSpec::scaled(cplx(amp(rng), complex_coefs ? amp(rng) : 0.0),
                                  JetSpec::trig(std::move(freq), amp(rng))));
  return JetSpec::sum(std::move(parts));
}

}  // namespace ptrac
