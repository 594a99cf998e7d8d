#ifndef ITERASYM_MAPS_HPP
#define ITERASYM_MAPS_HPP

// Catalog of the scalar recurrences x_k = f(x_{k-1}) studied by the library,
// with parameter validation, classification, and step functions that work
// both on exact rationals and on working-precision reals.

#include <iterasym/numeric.hpp>

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace iterasym {

/// Invalid map specification (bad family, parameter, or starting value).
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A step was asked to leave the map's forward-invariant domain.  This is
/// always an upstream bug, never a user error.
class DomainViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class Family {
  logistic,       // x -> p x (1 - x)
  logistic_plus,  // x -> p x (1 + x)
  sylvester,      // y -> y^2 - y + 1
  pythagorean,    // z -> (z^2 + 1) / 2
  sqrt_map,       // x -> x (1 - sqrt x)
  cubic_map,      // x -> x (1 - x^2)
  half_cubic,     // u -> u (1 - u^2 / 2)
  cos_map,        // v -> v cos v
  gauss_exp,      // w -> w exp(-w^2 / 2)
  power_sum,      // x -> x + x^(1 - q)
  reciprocal,     // x -> x / (1 + x^s)
};

inline constexpr std::array<std::pair<Family, std::string_view>, 11> family_names{{
    {Family::logistic, "logistic"},
    {Family::logistic_plus, "logistic-plus"},
    {Family::sylvester, "sylvester"},
    {Family::pythagorean, "pythagorean"},
    {Family::sqrt_map, "sqrt-map"},
    {Family::cubic_map, "cubic-map"},
    {Family::half_cubic, "half-cubic"},
    {Family::cos_map, "cos-map"},
    {Family::gauss_exp, "gauss-exp"},
    {Family::power_sum, "power-sum"},
    {Family::reciprocal, "reciprocal"},
}};

inline std::string_view to_string(Family f) {
  for (const auto& [fam, name] : family_names)
    if (fam == f) return name;
  return "?";
}

inline Family parse_family(std::string_view name) {
  for (const auto& [fam, n] : family_names)
    if (n == name) return fam;
  throw SpecError("unknown map family '" + std::string(name) + "'");
}

/// A starting value that is either an exact rational or the square root of
/// one (e.g. 1/sqrt(3) is held as sqrt(1/3)).
struct StartValue {
  Rational radicand = 0;  // the value itself unless `surd`
  bool surd = false;

  static StartValue rational(Rational r) { return {std::move(r), false}; }
  static StartValue root_of(Rational r) {
    // Collapse perfect squares back to rationals.
    Rational root;
    if (exact_rational_power(r, Rational(1, 2), root)) return {root, false};
    return {std::move(r), true};
  }

  Real value() const { return surd ? sqrt(Real(radicand)) : Real(radicand); }
  /// Value squared, exact (useful for domain comparisons).
  Rational squared() const { return surd ? radicand : radicand * radicand; }
  std::optional<Rational> exact() const { return surd ? std::nullopt : std::optional<Rational>(radicand); }

  std::string str() const { return surd ? "sqrt(" + to_string(radicand) + ")" : to_string(radicand); }
  friend bool operator==(const StartValue&, const StartValue&) = default;
};

/// Parses "1/2", "0.35", "sqrt(1/3)", "1/sqrt(3)", "sqrt(3)/3".
inline StartValue parse_start_value(std::string_view text) {
  auto s = detail::trim(text);
  auto sq = s.find("sqrt(");
  if (sq == std::string_view::npos) return StartValue::rational(parse_rational(s));
  auto close = s.find(')', sq);
  if (close == std::string_view::npos) throw ParseError("unbalanced sqrt( in '" + std::string(text) + "'");
  Rational radicand = parse_rational(s.substr(sq + 5, close - sq - 5));
  if (radicand < 0) throw ParseError("negative radicand in '" + std::string(text) + "'");
  auto before = detail::trim(s.substr(0, sq));
  auto after = detail::trim(s.substr(close + 1));
  Rational factor = 1;  // value = factor * sqrt(radicand)
  if (!before.empty()) {
    if (before.back() == '/') {
      // a/sqrt(r) = a * sqrt(1/r)
      if (radicand == 0) throw ParseError("division by sqrt(0) in '" + std::string(text) + "'");
      radicand = 1 / radicand;
      factor = parse_rational(before.substr(0, before.size() - 1));
    } else if (before.back() == '*') {
      factor = parse_rational(before.substr(0, before.size() - 1));
    } else {
      throw ParseError("cannot read '" + std::string(text) + "'");
    }
  }
  if (!after.empty()) {
    if (after.front() == '/') factor /= parse_rational(after.substr(1));
    else if (after.front() == '*') factor *= parse_rational(after.substr(1));
    else throw ParseError("cannot read '" + std::string(text) + "'");
  }
  if (factor < 0) throw ParseError("negative surd in '" + std::string(text) + "'");
  return StartValue::root_of(factor * factor * radicand);
}

/// Parameters of one recurrence; only the fields relevant to the family are
/// meaningful (the others stay zero).
struct MapSpec {
  Family family = Family::logistic;
  Rational p = 0;
  Rational q = 0;
  Rational s = 0;
  StartValue x0;

  friend bool operator==(const MapSpec&, const MapSpec&) = default;
};

enum class DecayKind { geometric_decay, algebraic_decay, doubling_growth, algebraic_growth };

inline std::string_view to_string(DecayKind k) {
  switch (k) {
    case DecayKind::geometric_decay: return "geometric-decay";
    case DecayKind::algebraic_decay: return "algebraic-decay";
    case DecayKind::doubling_growth: return "doubling-growth";
    case DecayKind::algebraic_growth: return "algebraic-growth";
  }
  return "?";
}

struct MapClassification {
  DecayKind kind;
  // p for geometric decay, tau (x ~ (lambda/k)^(1/tau)) for algebraic decay,
  // 2 for doubling growth, q for algebraic growth.
  Rational rate;
};

namespace detail {

inline bool is_decaying_unit_family(Family f) {
  return f == Family::sqrt_map || f == Family::cubic_map || f == Family::half_cubic || f == Family::cos_map ||
         f == Family::gauss_exp;
}

inline bool is_integer(const Rational& r) { return r.get_den() == 1; }

inline Real mul(const Real& x, const Rational& r) {
  Real out;
  mpfr_mul_q(out.get(), x.get(), r.get_mpq_t(), MPFR_RNDN);
  return out;
}

}  // namespace detail

/// Validates the spec and fills in defaults; throws SpecError naming the
/// violated inequality.
inline MapSpec validated(MapSpec spec) {
  auto need_x0_one = [&](std::string_view fam) {
    if (spec.x0 != StartValue::rational(1))
      throw SpecError(std::string(fam) + " requires x0=1");
  };
  switch (spec.family) {
    case Family::logistic:
      if (!(spec.p > 0 && spec.p <= 1)) throw SpecError("p must satisfy 0<p≤1");
      if (!(spec.x0.radicand > 0 && spec.x0.squared() < 1)) throw SpecError("x0 must satisfy 0<x0<1");
      break;
    case Family::logistic_plus:
      if (!(spec.p > 0 && spec.p <= 1)) throw SpecError("p must satisfy 0<p≤1");
      if (spec.p == 1) {
        if (spec.x0 != StartValue::rational(1)) throw SpecError("logistic-plus with p=1 requires x0=1");
      } else {
        Rational bound = (1 - spec.p) / spec.p;
        bound.canonicalize();
        if (!(spec.x0.radicand > 0 && spec.x0.squared() < bound * bound))
          throw SpecError("x0 must satisfy 0<x0<(1-p)/p=" + to_string(bound));
      }
      break;
    case Family::sylvester:
      spec.x0 = StartValue::rational(2);
      break;
    case Family::pythagorean:
      spec.x0 = StartValue::rational(3);
      break;
    case Family::sqrt_map:
    case Family::cubic_map:
    case Family::half_cubic:
    case Family::cos_map:
    case Family::gauss_exp:
      if (!(spec.x0.radicand > 0 && spec.x0.squared() < 1)) throw SpecError("x0 must satisfy 0<x0<1");
      break;
    case Family::power_sum:
      if (!(spec.q > 1)) throw SpecError("q must satisfy q>1");
      need_x0_one("power-sum");
      break;
    case Family::reciprocal:
      if (!(spec.s > 0)) throw SpecError("s must satisfy s>0");
      need_x0_one("reciprocal");
      break;
  }
  if (spec.family != Family::logistic && spec.family != Family::logistic_plus) spec.p = 0;
  if (spec.family != Family::power_sum) spec.q = 0;
  if (spec.family != Family::reciprocal) spec.s = 0;
  return spec;
}

inline MapClassification classify(const MapSpec& spec) {
  switch (spec.family) {
    case Family::logistic:
      if (spec.p < 1) return {DecayKind::geometric_decay, spec.p};
      return {DecayKind::algebraic_decay, 1};
    case Family::logistic_plus:
      if (spec.p < 1) return {DecayKind::geometric_decay, spec.p};
      return {DecayKind::doubling_growth, 2};
    case Family::sylvester:
    case Family::pythagorean:
      return {DecayKind::doubling_growth, 2};
    case Family::sqrt_map:
      return {DecayKind::algebraic_decay, Rational(1, 2)};
    case Family::cubic_map:
    case Family::half_cubic:
    case Family::cos_map:
    case Family::gauss_exp:
      return {DecayKind::algebraic_decay, 2};
    case Family::reciprocal:
      return {DecayKind::algebraic_decay, spec.s};
    case Family::power_sum:
      return {DecayKind::algebraic_growth, spec.q};
  }
  throw SpecError("unclassified family");
}

/// A validated, immutable recurrence.
class RecurrenceMap {
 public:
  explicit RecurrenceMap(MapSpec spec) : spec_(validated(std::move(spec))), class_(classify(spec_)) {}

  const MapSpec& spec() const { return spec_; }
  Family family() const { return spec_.family; }
  const MapClassification& classification() const { return class_; }
  DecayKind kind() const { return class_.kind; }
  const StartValue& x0() const { return spec_.x0; }

  /// True when step() is rational-in/rational-out.
  bool is_rational() const {
    switch (spec_.family) {
      case Family::logistic:
      case Family::logistic_plus:
      case Family::sylvester:
      case Family::pythagorean:
      case Family::cubic_map:
      case Family::half_cubic:
        return true;
      case Family::power_sum: return detail::is_integer(spec_.q);
      case Family::reciprocal: return detail::is_integer(spec_.s);
      default: return false;
    }
  }

  /// Margin 1 - p - p x0 of logistic-plus; envelope ratio is 1 - epsilon.
  Rational epsilon() const {
    if (spec_.family != Family::logistic_plus || spec_.x0.surd)
      throw SpecError("epsilon is defined for logistic-plus with rational x0");
    Rational e = 1 - spec_.p - spec_.p * spec_.x0.radicand;
    e.canonicalize();
    return e;
  }

  /// One application of the recurrence.  Num is Rational (exact, rational
  /// families only) or Real (rounded at the working precision).
  template <class Num>
  Num step(const Num& x) const;

 private:
  MapSpec spec_;
  MapClassification class_;
};

inline RecurrenceMap make_map(MapSpec spec) { return RecurrenceMap(std::move(spec)); }

namespace detail {

template <class Num>
void check_decreasing(const Num& x, const Num& y, const RecurrenceMap& m) {
  if (!(y > 0 && y < x))
    throw DomainViolation(std::string(to_string(m.family())) + ": step left the invariant interval (0, x)");
}

template <class Num>
void check_increasing(const Num& x, const Num& y, const RecurrenceMap& m) {
  if (!(y > x)) throw DomainViolation(std::string(to_string(m.family())) + ": growth step did not increase");
}

inline Rational rational_pow_int(const Rational& x, long n) {
  Rational out = 1;
  const long an = n < 0 ? -n : n;
  for (long i = 0; i < an; ++i) out *= x;
  if (n < 0) out = 1 / out;
  out.canonicalize();
  return out;
}

}  // namespace detail

template <class Num>
Num RecurrenceMap::step(const Num& x) const {
  static_assert(std::is_same_v<Num, Rational> || std::is_same_v<Num, Real>);
  constexpr bool exact = std::is_same_v<Num, Rational>;
  if constexpr (exact) {
    if (!is_rational())
      throw DomainViolation(std::string(to_string(spec_.family)) + " has no exact rational step");
  }
  if (!(x > 0)) throw DomainViolation(std::string(to_string(spec_.family)) + ": step outside domain (x<=0)");
  Num y;
  switch (spec_.family) {
    case Family::logistic: {
      if (!(x < 1)) throw DomainViolation("logistic: step outside domain (x>=1)");
      if constexpr (exact) y = spec_.p * x * (1 - x);
      else y = detail::mul(x * (Real(1) - x), spec_.p);
      detail::check_decreasing(x, y, *this);
      break;
    }
    case Family::logistic_plus: {
      if constexpr (exact) y = spec_.p * x * (1 + x);
      else y = detail::mul(x * (Real(1) + x), spec_.p);
      if (spec_.p < 1) detail::check_decreasing(x, y, *this);
      else detail::check_increasing(x, y, *this);
      break;
    }
    case Family::sylvester:
      y = x * x - x + Num(1);
      detail::check_increasing(x, y, *this);
      break;
    case Family::pythagorean:
      if constexpr (exact) y = (x * x + 1) / 2;
      else y = ldexp(x * x + Real(1), -1);
      detail::check_increasing(x, y, *this);
      break;
    case Family::sqrt_map:
      if constexpr (!exact) {
        if (!(x < 1)) throw DomainViolation("sqrt-map: step outside domain (x>=1)");
        y = x * (Real(1) - sqrt(x));
        detail::check_decreasing(x, y, *this);
      }
      break;
    case Family::cubic_map:
      if (!(x < 1)) throw DomainViolation("cubic-map: step outside domain (x>=1)");
      y = x * (Num(1) - x * x);
      detail::check_decreasing(x, y, *this);
      break;
    case Family::half_cubic:
      if (!(x < 1)) throw DomainViolation("half-cubic: step outside domain (x>=1)");
      if constexpr (exact) y = x * (1 - x * x / 2);
      else y = x * (Real(1) - ldexp(x * x, -1));
      detail::check_decreasing(x, y, *this);
      break;
    case Family::cos_map:
      if constexpr (!exact) {
        if (!(x < 1)) throw DomainViolation("cos-map: step outside domain (x>=1)");
        y = x * cos(x);
        detail::check_decreasing(x, y, *this);
      }
      break;
    case Family::gauss_exp:
      if constexpr (!exact) {
        if (!(x < 1)) throw DomainViolation("gauss-exp: step outside domain (x>=1)");
        y = x * exp(-ldexp(x * x, -1));
        detail::check_decreasing(x, y, *this);
      }
      break;
    case Family::power_sum:
      if constexpr (exact) y = x + detail::rational_pow_int(x, 1 - mpz_get_si(spec_.q.get_num_mpz_t()));
      else y = x + pow(x, Rational(1 - spec_.q));
      detail::check_increasing(x, y, *this);
      break;
    case Family::reciprocal:
      if constexpr (exact) y = x / (1 + detail::rational_pow_int(x, mpz_get_si(spec_.s.get_num_mpz_t())));
      else y = x / (Real(1) + pow(x, spec_.s));
      detail::check_decreasing(x, y, *this);
      break;
  }
  if constexpr (exact) y.canonicalize();
  return y;
}

/// The limit the orbit approaches: (1-p)/p is the nonzero fixed point of
/// logistic-plus with p<1 (the orbit itself tends to 0 there), 0 for the
/// decaying families, none for growth families.
inline std::optional<Rational> fixed_point(const RecurrenceMap& m) {
  const auto& s = m.spec();
  switch (m.kind()) {
    case DecayKind::geometric_decay:
      if (s.family == Family::logistic_plus) {
        Rational r = (1 - s.p) / s.p;
        r.canonicalize();
        return r;
      }
      return Rational(0);
    case DecayKind::algebraic_decay: return Rational(0);
    case DecayKind::doubling_growth:
    case DecayKind::algebraic_growth: return std::nullopt;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Canonical text form:  family(key=value, key=value)

inline std::string to_string(const MapSpec& spec) {
  const std::string fam(to_string(spec.family));
  switch (spec.family) {
    case Family::logistic:
    case Family::logistic_plus:
      return fam + "(p=" + to_string(spec.p) + ", x0=" + spec.x0.str() + ")";
    case Family::sylvester:
    case Family::pythagorean:
      return fam;
    case Family::power_sum:
      return fam + "(q=" + to_string(spec.q) + ")";
    case Family::reciprocal:
      return fam + "(s=" + to_string(spec.s) + ")";
    default:
      return fam + "(x0=" + spec.x0.str() + ")";
  }
}

inline std::string to_string(const RecurrenceMap& m) { return to_string(m.spec()); }

/// Parses the canonical grammar, e.g. "logistic(p=1/2, x0=1/2)",
/// "logistic-plus(p=1/3, x0=auto-mid)", "sqrt-map(x0=4/9)", "power-sum(q=2)".
/// Missing x0 defaults to 1/2 for the decaying families, auto-mid for
/// logistic-plus with p<1, and the fixed starting value elsewhere.
inline MapSpec parse_map_spec(std::string_view text) {
  auto s = detail::trim(text);
  MapSpec spec;
  std::string_view name = s, args;
  if (auto open = s.find('('); open != std::string_view::npos) {
    if (s.back() != ')') throw SpecError("missing ')' in map spec '" + std::string(text) + "'");
    name = detail::trim(s.substr(0, open));
    args = s.substr(open + 1, s.size() - open - 2);
  }
  spec.family = parse_family(name);
  bool have_x0 = false, auto_mid = false, have_p = false, have_q = false, have_s = false;
  while (!detail::trim(args).empty()) {
    auto comma = args.find(',');
    auto item = detail::trim(args.substr(0, comma));
    args = comma == std::string_view::npos ? std::string_view{} : args.substr(comma + 1);
    auto eq = item.find('=');
    if (eq == std::string_view::npos) throw SpecError("expected key=value, got '" + std::string(item) + "'");
    auto key = detail::trim(item.substr(0, eq));
    auto value = detail::trim(item.substr(eq + 1));
    try {
      if (key == "p") {
        spec.p = parse_rational(value);
        have_p = true;
      } else if (key == "q") {
        spec.q = parse_rational(value);
        have_q = true;
      } else if (key == "s") {
        spec.s = parse_rational(value);
        have_s = true;
      } else if (key == "x0" || key == "y0" || key == "z0") {
        have_x0 = true;
        if (value == "auto-mid") auto_mid = true;
        else spec.x0 = parse_start_value(value);
      } else {
        throw SpecError("unknown parameter '" + std::string(key) + "'");
      }
    } catch (const ParseError& e) {
      throw SpecError(e.what());
    }
  }
  const Family f = spec.family;
  if ((f == Family::logistic || f == Family::logistic_plus) && !have_p) throw SpecError("missing parameter p");
  if (f == Family::power_sum && !have_q) throw SpecError("missing parameter q");
  if (f == Family::reciprocal && !have_s) throw SpecError("missing parameter s");
  if (auto_mid) {
    if (f != Family::logistic_plus) throw SpecError("x0=auto-mid applies to logistic-plus only");
    if (spec.p <= 0 || spec.p >= 1) throw SpecError("x0=auto-mid requires 0<p<1");
    Rational mid = (1 - spec.p) / (2 * spec.p);
    mid.canonicalize();
    spec.x0 = StartValue::rational(mid);
  } else if (!have_x0) {
    if (f == Family::logistic_plus) {
      if (spec.p > 0 && spec.p < 1) {
        Rational mid = (1 - spec.p) / (2 * spec.p);
        mid.canonicalize();
        spec.x0 = StartValue::rational(mid);
      } else {
        spec.x0 = StartValue::rational(1);
      }
    } else if (f == Family::power_sum || f == Family::reciprocal) {
      spec.x0 = StartValue::rational(1);
    } else {
      spec.x0 = StartValue::rational(Rational(1, 2));
    }
  }
  if ((f == Family::sylvester && have_x0 && spec.x0 != StartValue::rational(2)) ||
      (f == Family::pythagorean && have_x0 && spec.x0 != StartValue::rational(3)))
    throw SpecError(std::string(to_string(f)) + " has a fixed starting value (y0=2, z0=3)");
  return validated(spec);
}

inline RecurrenceMap parse_map(std::string_view text) { return RecurrenceMap(parse_map_spec(text)); }

}  // namespace iterasym

#endif  // ITERASYM_MAPS_HPP
