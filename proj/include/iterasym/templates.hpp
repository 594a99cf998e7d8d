#ifndef ITERASYM_TEMPLATES_HPP
#define ITERASYM_TEMPLATES_HPP

// Stored expansions (exact-rational JSON fixtures) and their verification
// against the functional equation of the map they describe.

#include <iterasym/maps.hpp>
#include <iterasym/matching.hpp>
#include <iterasym/series.hpp>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#ifndef ITERASYM_DATA_DIR
#define ITERASYM_DATA_DIR "data"
#endif

namespace iterasym {

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixture root: $ITERASYM_DATA_DIR if set, else the build-time location.
inline std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("ITERASYM_DATA_DIR"); env && *env) return env;
  return ITERASYM_DATA_DIR;
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TemplateError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw TemplateError(path.string() + ": " + e.what());
  }
}

struct ExpansionTemplate {
  MapSpec spec;
  VariableScale scale;
  AsymptoticSeries series;  // truncated at `order`
  Rational order;
  bool limit_only = false;  // only the terms that define the constant
  std::string provenance;
  std::string constant_name = "C";
  Rational constant_factor = 1;
  std::filesystem::path source;
};

namespace detail {

inline Rational json_rational(const nlohmann::json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long>());
  throw TemplateError("expected a rational string, got " + j.dump());
}

inline VariableScale scale_from_json(const nlohmann::json& j) {
  VariableScale v;
  if (j.is_object()) {
    v.base = json_rational(j.at("base"));
    v.exponent = json_rational(j.at("exponent"));
    v.power = json_rational(j.at("power"));
  }
  return v;
}

inline nlohmann::json scale_to_json(const VariableScale& v) {
  return {{"base", to_string(v.base)}, {"exponent", to_string(v.exponent)}, {"power", to_string(v.power)}};
}

inline std::string map_text_from_fixture(const nlohmann::json& j) {
  std::string text = j.at("family").get<std::string>();
  std::string args;
  if (j.contains("params"))
    for (const auto& [k, v] : j.at("params").items()) args += (args.empty() ? "" : ", ") + k + "=" + v.get<std::string>();
  return args.empty() ? text : text + "(" + args + ")";
}

}  // namespace detail

inline ExpansionTemplate load_template(const std::filesystem::path& path) {
  const auto j = read_json(path);
  ExpansionTemplate t;
  try {
    auto spec = parse_map_spec(detail::map_text_from_fixture(j));
    t.spec = spec;
    t.scale = detail::scale_from_json(j.value("variable", nlohmann::json{}));
    t.order = detail::json_rational(j.at("truncation_order"));
    t.series = series_from_json(j.at("terms"), t.order);
    t.limit_only = j.value("limit", false);
    t.provenance = j.value("provenance", "");
    if (j.contains("constant")) {
      t.constant_name = j["constant"].at("name").get<std::string>();
      t.constant_factor = detail::json_rational(j["constant"].at("factor"));
    }
  } catch (const nlohmann::json::exception& e) {
    throw TemplateError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw TemplateError(path.string() + ": " + e.what());
  }
  t.source = path;
  return t;
}

/// Fixture file for a map, if one exists.
inline std::optional<std::string> template_file_for(const MapSpec& spec) {
  switch (spec.family) {
    case Family::sqrt_map: return "sqrt_map.json";
    case Family::logistic:
      if (spec.p == 1) return "logistic_p1.json";
      break;
    case Family::power_sum:
      if (spec.q == 2) return "power_sum_q2.json";
      if (spec.q == 3) return "power_sum_q3.json";
      if (spec.q == Rational(3, 2)) return "power_sum_q3_2.json";
      break;
    case Family::reciprocal:
      if (spec.s == 2) return "reciprocal_s2.json";
      if (spec.s == 3) return "reciprocal_s3.json";
      if (spec.s == Rational(3, 2)) return "reciprocal_s3_2.json";
      break;
    default: break;
  }
  return std::nullopt;
}

/// Stored expansion for `map`.  Throws TemplateError for maps without one
/// (use match_coefficients instead).
inline ExpansionTemplate template_for(const RecurrenceMap& map, const std::filesystem::path& data_dir = default_data_dir()) {
  auto file = template_file_for(map.spec());
  if (!file) throw TemplateError("no stored template for " + to_string(map) + "; derive it with match_coefficients");
  return load_template(data_dir / "templates" / *file);
}

inline bool has_template(const RecurrenceMap& map) { return template_file_for(map.spec()).has_value(); }

/// Exact residual check of a stored expansion at a stated order.  The
/// reported order is that of the first template term the residual
/// implicates (residual alpha minus one); PASS iff it exceeds `order`.
inline ResidualReport verify_template(const RecurrenceMap& map, const ExpansionTemplate& tmpl, const Rational& order) {
  const FunctionalEquation eq = equation_for(map);
  if (!(eq.scale.base == tmpl.scale.base && eq.scale.exponent == tmpl.scale.exponent && eq.scale.power == tmpl.scale.power))
    throw TemplateError("template variable " + tmpl.scale.str() + " differs from the equation's " + eq.scale.str());
  if (order > tmpl.order)
    throw TemplateError("stated order " + to_string(order) + " exceeds the template truncation " + to_string(tmpl.order));
  return verify_series(eq, tmpl.series, order);
}

inline ResidualReport verify_template(const RecurrenceMap& map, const ExpansionTemplate& tmpl) {
  return verify_template(map, tmpl, tmpl.order);
}

/// Serializes a template (used for derived expansions and mutation tests).
inline nlohmann::json template_to_json(const ExpansionTemplate& t) {
  nlohmann::json params = nlohmann::json::object();
  switch (t.spec.family) {
    case Family::logistic:
    case Family::logistic_plus: params["p"] = to_string(t.spec.p); break;
    case Family::power_sum: params["q"] = to_string(t.spec.q); break;
    case Family::reciprocal: params["s"] = to_string(t.spec.s); break;
    default: break;
  }
  return {{"family", std::string(to_string(t.spec.family))},
          {"params", params},
          {"variable", detail::scale_to_json(t.scale)},
          {"truncation_order", to_string(t.order)},
          {"limit", t.limit_only},
          {"provenance", t.provenance},
          {"constant", {{"name", t.constant_name}, {"factor", to_string(t.constant_factor)}}},
          {"terms", to_json(t.series)}};
}

/// Expansion derived by matching, packaged like a fixture.
inline ExpansionTemplate derived_template(const RecurrenceMap& map, const Rational& order) {
  const FunctionalEquation eq = equation_for(map);
  ExpansionTemplate t;
  t.spec = map.spec();
  t.scale = eq.scale;
  t.order = order;
  t.series = match_coefficients(eq, order);
  t.provenance = "derived (no paper fixture)";
  t.constant_name = eq.constant_name;
  t.constant_factor = eq.constant_factor;
  return t;
}

// ---------------------------------------------------------------------------
// Power-sum coefficients of y_k = x_k^q ~ alpha k + beta ln k + C + gamma ln(k)/k + delta/k.

struct PowerSumCoeffs {
  Rational q;
  Rational alpha, beta, gamma;
  CoeffPoly delta;
};

inline PowerSumCoeffs power_sum_coeffs(const Rational& q) {
  if (!(q > 1)) throw SpecError("q must satisfy q>1");
  const Rational iq = 1 / q;
  PowerSumCoeffs c;
  c.q = q;
  c.alpha = q;
  c.beta = (q - 1) / 2;
  c.gamma = iq / 4 - Rational(1, 2) + q / 4;
  c.delta = CoeffPoly(std::vector<Rational>{-iq / 12 + Rational(1, 4) - q / 6, -iq / 2 + Rational(1, 2)});
  return c;
}

inline AsymptoticSeries power_sum_y_series(const PowerSumCoeffs& c) {
  AsymptoticSeries y = AsymptoticSeries::zero(1);
  y.add_term({-1, 0}, c.alpha);
  y.add_term({0, 1}, c.beta);
  y.add_term({0, 0}, CoeffPoly::symbol());
  y.add_term({1, 1}, c.gamma);
  y.add_term({1, 0}, c.delta);
  return y;
}

/// q^(1-1/q) x = q (y/q)^(1/q), expanded through order 2 - 1/q.
inline AsymptoticSeries power_sum_x_from_y(const PowerSumCoeffs& c) {
  const Rational r = 1 / c.q;
  return (pow(power_sum_y_series(c) * Rational(r), r) * c.q).truncated(2 - r);
}

/// General-q display: coefficients are Laurent polynomials in q.
struct GeneralPowerSum {
  struct Term {
    Rational shift;  // alpha = shift - 1/q
    int ln_power = 0;
    std::vector<std::map<long, Rational>> coeff;  // per power of C: q-exponent -> rational
  };
  std::vector<Term> terms;
  Rational truncation_shift;

  AsymptoticSeries specialize(const Rational& q) const {
    if (!(q > 1)) throw SpecError("q must satisfy q>1");
    const Rational r = 1 / q;
    AsymptoticSeries out = AsymptoticSeries::zero(truncation_shift - r);
    for (const auto& t : terms) {
      std::vector<Rational> cs;
      for (const auto& laurent : t.coeff) {
        Rational v = 0;
        for (const auto& [e, a] : laurent) v += a * detail::rational_pow_int(q, e);
        cs.push_back(v);
      }
      out.add_term({t.shift - r, t.ln_power}, CoeffPoly(std::move(cs)));
    }
    return out;
  }
};

inline GeneralPowerSum load_general_power_sum(const std::filesystem::path& data_dir = default_data_dir()) {
  const auto path = data_dir / "templates" / "power_sum_general.json";
  const auto j = read_json(path);
  GeneralPowerSum g;
  try {
    g.truncation_shift = detail::json_rational(j.at("truncation_shift"));
    for (const auto& jt : j.at("terms")) {
      GeneralPowerSum::Term t;
      t.shift = detail::json_rational(jt.at("shift"));
      t.ln_power = jt.at("ln_power").get<int>();
      for (const auto& laurent : jt.at("coeff_q")) {
        std::map<long, Rational> m;
        for (const auto& [e, a] : laurent.items()) m[std::stol(e)] = detail::json_rational(a);
        t.coeff.push_back(std::move(m));
      }
      g.terms.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw TemplateError(path.string() + ": " + e.what());
  }
  return g;
}

// ---------------------------------------------------------------------------
// Coefficient tables of x -> x(1 - sqrt x).

struct SqrtMapTables {
  Rational tau, lambda;
  std::vector<Rational> a, b, a0, c;
  std::map<int, CoeffPoly> T, P;  // polynomials in X, ascending powers
};

inline SqrtMapTables load_sqrt_map_tables(const std::filesystem::path& data_dir = default_data_dir()) {
  const auto path = data_dir / "templates" / "sqrt_map_tables.json";
  const auto j = read_json(path);
  SqrtMapTables t;
  auto list = [](const nlohmann::json& arr) {
    std::vector<Rational> out;
    for (const auto& x : arr) out.push_back(detail::json_rational(x));
    return out;
  };
  try {
    t.tau = detail::json_rational(j.at("tau"));
    t.lambda = detail::json_rational(j.at("lambda"));
    t.a = list(j.at("a"));
    t.b = list(j.at("b"));
    t.a0 = list(j.at("a0"));
    t.c = list(j.at("c"));
    for (const auto& [m, coeffs] : j.at("T").items()) t.T[std::stoi(m)] = CoeffPoly(list(coeffs));
    for (const auto& [m, coeffs] : j.at("P").items()) t.P[std::stoi(m)] = CoeffPoly(list(coeffs));
  } catch (const nlohmann::json::exception& e) {
    throw TemplateError(path.string() + ": " + e.what());
  }
  if (t.b.empty()) throw TemplateError(path.string() + ": empty b table");
  return t;
}

/// (lambda/k)^(1/tau) {1 + sum_m P_m(X)/k^m},  X = -(1/tau)[b_1 ln k + C],
/// with P_1 = X, truncated after the last stored P_m.
inline AsymptoticSeries expansion_from_tables(const SqrtMapTables& t) {
  Rational lead_c;
  const Rational v = 1 / t.tau;
  if (!exact_rational_power(t.lambda, v, lead_c)) throw TemplateError("lambda^(1/tau) is irrational");
  AsymptoticSeries X;
  X.add_term({0, 1}, CoeffPoly(-t.b.front() / t.tau));
  X.add_term({0, 0}, CoeffPoly::symbol() * Rational(-1 / t.tau));
  std::map<int, CoeffPoly> P = t.P;
  P.emplace(1, CoeffPoly(std::vector<Rational>{0, 1}));
  const int M = P.rbegin()->first;
  AsymptoticSeries body = AsymptoticSeries::constant(Rational(1));
  for (const auto& [m, poly] : P) {
    AsymptoticSeries value;  // Horner in X
    for (size_t i = poly.coeffs().size(); i-- > 0;) value = value * X + AsymptoticSeries::constant(poly.coeffs()[i]);
    body += value.times_scale(m);
  }
  return (body * lead_c).times_scale(v).truncated(v + M);
}

}  // namespace iterasym

#endif  // ITERASYM_TEMPLATES_HPP
