#ifndef ITERASYM_EXTRACT_HPP
#define ITERASYM_EXTRACT_HPP

// Constant extraction.  Geometric and doubling maps get rigorous digit
// counts from analytic tail bounds; algebraic maps fit a derived asymptotic
// expansion at two depths and report their agreement as a heuristic count.

#include <iterasym/maps.hpp>
#include <iterasym/matching.hpp>
#include <iterasym/orbit.hpp>
#include <iterasym/series.hpp>
#include <iterasym/templates.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace iterasym {

/// An extraction stage failed (Newton divergence, unusable expansion).
class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The expansion is too short for the requested digits at any allowed depth.
class InsufficientOrder : public ExtractionError {
 public:
  using ExtractionError::ExtractionError;
};

enum class Certification { rigorous, two_depth_heuristic };
enum class Method { product, doubling_log, expansion_fit };

inline std::string_view to_string(Certification c) {
  return c == Certification::rigorous ? "rigorous" : "two-depth-heuristic";
}
inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::product: return "product";
    case Method::doubling_log: return "doubling-log";
    case Method::expansion_fit: return "expansion-fit";
  }
  return "?";
}

struct ConstantEstimate {
  std::string map;
  std::string name;
  std::string value;  // decimal, at least certified_digits + 2 significant digits
  Real real_value;
  int certified_digits = 0;
  Certification certification = Certification::rigorous;
  Method method = Method::product;
  long k_used = 0;
  int precision_digits = 0;
  double elapsed_ms = 0;
  std::vector<std::pair<std::string, std::string>> related;  // e.g. {"C", "1.72..."}
  std::string note;
};

namespace detail {

inline int printed_digits(const PrecisionPolicy& policy) { return policy.target_digits + 2; }

inline int digits_from_relative_error(const Real& rel, int cap) {
  if (rel.is_zero()) return cap;
  const double d = -log10(rel).to_double();
  if (!std::isfinite(d)) return cap;
  return std::clamp(static_cast<int>(std::floor(d)), 0, cap);
}

class Stopwatch {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Geometric decay: C = x0 prod (1 -/+ x_j).

inline ConstantEstimate geometric_constant(const RecurrenceMap& map, const PrecisionPolicy& policy, long depth = 0) {
  detail::Stopwatch sw;
  detail::require_kind(map, DecayKind::geometric_decay, "geometric_constant");
  const long n = depth > 0 ? depth : default_geometric_depth(map, policy.target_digits);
  const int wd = policy.working_digits(n);
  auto rec = iterate(map, policy, n);
  WorkingPrecision guard(wd);
  const Real& P = *rec.running_product;
  const Real B = detail::tail_bound_from(map, *rec.x);
  // |C/P - 1| <= e^B - 1; rounding adds about one ulp per factor.
  Real rel = expm1(B) + Real(static_cast<long>(4 * (n + 1))) * pow_int(Real(10), -wd);
  ConstantEstimate e;
  e.map = to_string(map);
  e.name = "C";
  e.real_value = P;
  e.value = to_decimal(P, detail::printed_digits(policy));
  e.certified_digits = detail::digits_from_relative_error(rel, policy.target_digits);
  e.certification = Certification::rigorous;
  e.method = Method::product;
  e.k_used = n;
  e.precision_digits = wd;
  e.elapsed_ms = sw.ms();
  return e;
}

// ---------------------------------------------------------------------------
// Doubling growth: ln C = 2^-(k+e) L_k + sum_{j>=k} 2^-(j+1+e) correction_j.

inline ConstantEstimate doubling_constant(const RecurrenceMap& map, const PrecisionPolicy& policy, long k_max = 64) {
  detail::Stopwatch sw;
  detail::require_kind(map, DecayKind::doubling_growth, "doubling_constant");
  if (k_max < 8) throw SpecError("doubling extraction needs k_max >= 8");
  const long shift = doubling_exponent_shift(map);
  const auto L = doubling_log_orbit(map, policy, k_max);
  const auto corr = doubling_corrections(map, L);
  const int wd = policy.working_digits(k_max);
  WorkingPrecision guard(wd + 10);
  const long k0 = 8;
  Real lnC = ldexp(L[static_cast<size_t>(k0)], -k0);
  for (long j = k0; j < k_max; ++j) lnC += ldexp(corr[static_cast<size_t>(j)], -(j + 1));
  // Remaining tail: |correction_j| <= 2 e^{-L_j} (e^{-2 L_j} for pythagorean)
  // and L_j increases, so it is below 2^{-k_max} * 2 e^{-L_{k_max}}.
  Real tail = ldexp(exp(-L.back()), 1 - k_max);
  lnC = ldexp(lnC, -shift);
  Real C = exp(lnC);
  Real rel = tail + Real(static_cast<long>(4 * k_max)) * pow_int(Real(10), -wd);
  ConstantEstimate e;
  e.map = to_string(map);
  e.name = shift ? "sqrtC" : "C";
  e.real_value = C;
  e.value = to_decimal(C, detail::printed_digits(policy));
  e.certified_digits = detail::digits_from_relative_error(rel, policy.target_digits);
  e.certification = Certification::rigorous;
  e.method = Method::doubling_log;
  e.k_used = k_max;
  e.precision_digits = wd;
  e.elapsed_ms = sw.ms();
  if (shift) e.related.emplace_back("C", to_decimal(C * C, detail::printed_digits(policy)));
  return e;
}

// ---------------------------------------------------------------------------
// Expansion fits.

/// Expansion used to fit a map's constant, derived by matching to `order`
/// and checked against the stored template where one exists.
struct FitExpansion {
  FunctionalEquation equation;
  AsymptoticSeries series;
  Rational order;
};

/// Default fit order for each algebraic family.
inline Rational default_fit_order(const RecurrenceMap& map) {
  const auto& sp = map.spec();
  switch (sp.family) {
    case Family::sqrt_map: return 16;
    case Family::logistic: return 14;
    case Family::cubic_map:
    case Family::half_cubic: return Rational(29, 2);
    case Family::cos_map:
    case Family::gauss_exp: return Rational(25, 2);
    case Family::power_sum: return 12 - 1 / sp.q;
    case Family::reciprocal: return 12 + 1 / sp.s;
    default: break;
  }
  throw ClassificationError("no expansion fit for " + to_string(map));
}

namespace detail {

struct ExpansionCache {
  std::mutex mu;
  std::map<std::string, AsymptoticSeries> entries;
};

inline ExpansionCache& expansion_cache() {
  static ExpansionCache cache;
  return cache;
}

}  // namespace detail

/// Derived expansion for `map` to `order`; cached per (equation, order).
/// When a template is stored it must agree term by term with the
/// derivation through the template's order.
inline FitExpansion fit_expansion(const RecurrenceMap& map, const Rational& order,
                                  const std::filesystem::path& data_dir = default_data_dir()) {
  FitExpansion fx{equation_for(map), {}, order};
  const std::string key = fx.equation.name + "@" + to_string(order);
  auto& cache = detail::expansion_cache();
  {
    std::lock_guard lock(cache.mu);
    if (auto it = cache.entries.find(key); it != cache.entries.end()) fx.series = it->second;
  }
  if (fx.series.empty()) {
    fx.series = match_coefficients(fx.equation, order);
    std::lock_guard lock(cache.mu);
    cache.entries.emplace(key, fx.series);
  }
  if (has_template(map)) {
    const auto t = template_for(map, data_dir);
    const Rational through = std::min(t.order, order);
    if (auto d = first_difference(t.series, fx.series, through))
      throw TemplateError("stored template " + t.source.filename().string() + " disagrees with the derived expansion at ln(k)^" +
                          std::to_string(d->ln_power) + "/k^" + to_string(d->alpha) + ": stored " +
                          t.series.coeff(d->alpha, d->ln_power).str() + ", derived " +
                          fx.series.coeff(d->alpha, d->ln_power).str());
  }
  return fx;
}

struct FitOptions {
  long K = 0;           // 0 selects the smallest adequate depth from the ladder
  Rational order = 0;   // 0 selects default_fit_order
  long k_cap = 200000;  // largest depth the ladder may choose
  std::filesystem::path data_dir = default_data_dir();
};

namespace detail {

struct FitSolve {
  Real C;
  Real dS_dC;
  Real X;
};

/// Solves S(K, C) = X for C by damped Newton from the linearized guess.
inline FitSolve solve_for_constant(const AsymptoticSeries& s, long K, const Real& X, int working_digits) {
  const Real k(K);
  const Real zero;
  const auto at0 = evaluate(s, k, zero);
  if (at0.d_dC.is_zero()) throw ExtractionError("expansion does not depend on C");
  Real C = (X - at0.value) / at0.d_dC;
  const Real tol = pow_int(Real(10), -(working_digits - 5));
  for (int it = 0; it < 60; ++it) {
    const auto v = evaluate(s, k, C);
    const Real f = v.value - X;
    if (v.d_dC.is_zero()) throw ExtractionError("Newton: zero derivative in C");
    Real step = f / v.d_dC;
    Real lambda(1);
    for (int halving = 0; halving < 30; ++halving) {
      const Real trial = C - lambda * step;
      if (abs(evaluate(s, k, trial).value - X) <= abs(f)) break;
      lambda = ldexp(lambda, -1);
    }
    C -= lambda * step;
    const Real scale = abs(C) > Real(1) ? abs(C) : Real(1);
    if (abs(lambda * step) <= tol * scale) return {C, evaluate(s, k, C).d_dC, X};
  }
  throw ExtractionError("Newton did not converge at K=" + std::to_string(K));
}

/// Contribution of the last order present, converted to an error in C.
inline Real truncation_error_in_C(const AsymptoticSeries& s, long K, const Real& C) {
  const auto orders = orders_of(s);
  const Real last = abs(evaluate_order(s, orders.back(), Real(K), C));
  const Real d = abs(evaluate(s, Real(K), C).d_dC);
  return last / d;
}

}  // namespace detail

/// Fits C in the expansion at depths K and 2K.  `factor` scales the fitted
/// symbol C to the reported constant.
inline ConstantEstimate expansion_constant(const RecurrenceMap& map, const FitExpansion& fx, const PrecisionPolicy& policy,
                                           const FitOptions& opt = {}) {
  detail::Stopwatch sw;
  const auto& s = fx.series;
  const auto& eq = fx.equation;
  const Real tolerance_target = [&] {
    WorkingPrecision wp(40);
    return pow_int(Real(10), -(policy.target_digits + 3));
  }();

  // Depth from the ladder, judged by the size of the last included order.
  long K = opt.K;
  if (K <= 0) {
    // Rough C from a short, low-precision fit sets the probe for the ladder.
    const long K0 = 500;
    const PrecisionPolicy rough{20, 0};
    auto r0 = iterate(map, rough, K0);
    WorkingPrecision wp(40);
    const Real c_probe = detail::solve_for_constant(s, K0, eq.scale.apply(*r0.x), 35).C;
    for (long cand : {1000L, 2000L, 5000L, 10000L, 20000L, 50000L, 100000L, 200000L}) {
      if (cand > opt.k_cap) break;
      K = cand;
      if (detail::truncation_error_in_C(s, cand, c_probe) < tolerance_target) break;
    }
    if (K <= 0) K = opt.k_cap;
  }
  const long K2 = 2 * K;
  const int wd = policy.working_digits(K2);

  // One orbit pass captures x_K and x_2K.
  std::optional<Real> xK;
  auto last = iterate(map, policy, K2, [&](const OrbitRecord& r) {
    if (r.k == K) xK = *r.x;
  });
  WorkingPrecision guard(wd);
  const Real X1 = eq.scale.apply(*xK);
  const Real X2 = eq.scale.apply(*last.x);

  const auto s1 = detail::solve_for_constant(s, K, X1, wd);
  const auto s2 = detail::solve_for_constant(s, K2, X2, wd);

  // Digits lost to conditioning: dC = dX / |dS/dC|, with dX about K ulps of X.
  const Real loss = abs(X2) * Real(K2) / abs(s2.dS_dC);
  const int lost = static_cast<int>(std::ceil(log10(loss).to_double()));
  if (wd - lost < policy.target_digits + 2)
    throw PrecisionExhausted("expansion fit at K=" + std::to_string(K2) + " loses " + std::to_string(lost) +
                             " of " + std::to_string(wd) + " working digits; raise --guard-digits");

  const Real trunc_err = detail::truncation_error_in_C(s, K, s1.C);
  int certified = std::min(agreeing_digits(s1.C, s2.C, policy.target_digits + 2) - 2, policy.target_digits);
  certified = std::max(certified, 0);
  const Real Cval = s2.C;
  const Real reported = Cval * Real(eq.constant_factor);
  ConstantEstimate e;
  e.map = to_string(map);
  e.name = eq.constant_name;
  e.real_value = reported;
  e.value = to_decimal(reported, detail::printed_digits(policy));
  e.certification = Certification::two_depth_heuristic;
  e.method = Method::expansion_fit;
  e.k_used = K2;
  e.precision_digits = wd;
  if (trunc_err > tolerance_target) {
    const int bound = detail::digits_from_relative_error(trunc_err / abs(Cval), policy.target_digits);
    if (opt.K <= 0 && K >= opt.k_cap)
      throw InsufficientOrder("expansion through order " + to_string(fx.order) + " at K=" + std::to_string(K) +
                              " supports about " + std::to_string(bound) + " digits; " +
                              std::to_string(policy.target_digits) + " requested");
    e.note = "order " + to_string(fx.order) + " bottleneck: last order contributes ~1e-" + std::to_string(bound);
    certified = std::min(certified, bound);
  }
  e.certified_digits = certified;
  if (eq.constant_factor != 1) e.related.emplace_back("C", to_decimal(Cval, detail::printed_digits(policy)));
  e.elapsed_ms = sw.ms();
  return e;
}

inline ConstantEstimate expansion_constant(const RecurrenceMap& map, const PrecisionPolicy& policy, const FitOptions& opt = {}) {
  const Rational order = opt.order != 0 ? opt.order : default_fit_order(map);
  return expansion_constant(map, fit_expansion(map, order, opt.data_dir), policy, opt);
}

/// Decay constant of x -> x/(1+x^s), x0 = 1, reported as c(q) with q = s
/// (Lambda for s = 3/2).
inline ConstantEstimate reciprocal_constant(const Rational& s, const PrecisionPolicy& policy, const FitOptions& opt = {}) {
  MapSpec spec;
  spec.family = Family::reciprocal;
  spec.s = s;
  spec.x0 = StartValue::rational(1);
  return expansion_constant(RecurrenceMap(spec), policy, opt);
}

enum class PowerSumRoute { automatic, direct, reciprocal };

/// c(q) = C/q of x -> x + x^(1-q), x0 = 1.  The direct fit is used for
/// q in {2, 3}; other q go through the reciprocal map with s = q.
inline ConstantEstimate power_sum_constant(const Rational& q, const PrecisionPolicy& policy,
                                           PowerSumRoute route = PowerSumRoute::automatic, const FitOptions& opt = {}) {
  if (!(q > 1)) throw SpecError("q must satisfy q>1");
  const bool direct_ok = q == 2 || q == 3;
  if (route == PowerSumRoute::direct && !direct_ok)
    throw SpecError("the direct power-sum fit is available for q=2 and q=3 only");
  if (route == PowerSumRoute::reciprocal || (route == PowerSumRoute::automatic && !direct_ok)) {
    auto e = reciprocal_constant(q, policy, opt);
    {
      WorkingPrecision wp(e.precision_digits);
      e.related = {{"C", to_decimal(e.real_value * Real(q), detail::printed_digits(policy))}};
    }
    e.note = "via x -> x/(1+x^" + to_string(q) + ")" + (e.note.empty() ? "" : "; " + e.note);
    return e;
  }
  MapSpec spec;
  spec.family = Family::power_sum;
  spec.q = q;
  spec.x0 = StartValue::rational(1);
  auto e = expansion_constant(RecurrenceMap(spec), policy, opt);
  return e;
}

/// Routes a map to the extractor matching its classification.
inline ConstantEstimate estimate(const RecurrenceMap& map, const PrecisionPolicy& policy, long k_max = 0,
                                 const std::filesystem::path& data_dir = default_data_dir()) {
  switch (map.kind()) {
    case DecayKind::geometric_decay: return geometric_constant(map, policy, k_max);
    case DecayKind::doubling_growth: return doubling_constant(map, policy, k_max > 0 ? k_max : 64);
    case DecayKind::algebraic_growth: {
      FitOptions opt;
      opt.K = k_max > 0 ? k_max / 2 : 0;
      opt.data_dir = data_dir;
      auto e = power_sum_constant(map.spec().q, policy, PowerSumRoute::automatic, opt);
      e.map = to_string(map);
      return e;
    }
    case DecayKind::algebraic_decay: {
      FitOptions opt;
      opt.K = k_max > 0 ? k_max / 2 : 0;
      opt.data_dir = data_dir;
      return expansion_constant(map, policy, opt);
    }
  }
  throw ClassificationError("unclassified map " + to_string(map));
}

// ---------------------------------------------------------------------------

struct ScanPoint {
  StartValue x0;
  ConstantEstimate estimate;
};

struct ScanResult {
  std::vector<ScanPoint> points;
  size_t argmin = 0;
};

/// C(x0) over a grid of starting values (12-digit fits), with the argmin.
inline ScanResult minimality_scan(const MapSpec& base, const std::vector<StartValue>& grid, int digits = 12) {
  if (grid.empty()) throw SpecError("empty x0 grid");
  ScanResult out;
  PrecisionPolicy policy{digits, 0};
  for (const auto& x0 : grid) {
    MapSpec spec = base;
    spec.x0 = x0;
    RecurrenceMap map(spec);
    if (map.kind() != DecayKind::algebraic_decay)
      throw ClassificationError("minimality_scan needs an algebraic-decay map, got " + to_string(map));
    out.points.push_back({x0, expansion_constant(map, policy)});
  }
  for (size_t i = 1; i < out.points.size(); ++i)
    if (out.points[i].estimate.real_value < out.points[out.argmin].estimate.real_value) out.argmin = i;
  return out;
}

}  // namespace iterasym

#endif  // ITERASYM_EXTRACT_HPP
