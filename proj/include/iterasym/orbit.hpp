#ifndef ITERASYM_ORBIT_HPP
#define ITERASYM_ORBIT_HPP

// High-precision orbit iteration with the accumulators the extractors need:
// plain orbits, running products for geometric decay, and log-domain orbits
// for doubly-exponential growth.

#include <iterasym/maps.hpp>
#include <iterasym/numeric.hpp>

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace iterasym {

/// Working precision ran out (guard digits too few for the requested depth,
/// or cancellation in extractor arithmetic consumed them).
class PrecisionExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Map routed to an operation that does not apply to its classification.
class ClassificationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PrecisionPolicy {
  int target_digits = 15;
  int guard_digits = 0;  // 0 selects required_guard(k_max)

  /// Minimum guard digits for an orbit of depth k_max.
  static int required_guard(long k_max) {
    return 15 + static_cast<int>(std::ceil(std::log10(static_cast<double>(k_max) + 1)));
  }

  int guard_for(long k_max) const {
    const int need = required_guard(k_max);
    if (guard_digits == 0) return need;
    if (guard_digits < need)
      throw PrecisionExhausted("guard digits " + std::to_string(guard_digits) + " below the " +
                               std::to_string(need) + " required for depth " + std::to_string(k_max));
    return guard_digits;
  }

  int working_digits(long k_max) const { return target_digits + guard_for(k_max); }

  PrecisionPolicy with_doubled_guard(long k_max) const { return {target_digits, 2 * guard_for(k_max)}; }
};

struct OrbitRecord {
  long k = 0;
  std::optional<Real> x;                // x_k (absent once it is too large to hold)
  std::optional<Real> running_product;  // x0 * prod_{j<k} (1 -/+ x_j), geometric decay only
  std::optional<Real> log_x;            // ln x_k, doubling growth only
};

using OrbitCallback = std::function<void(const OrbitRecord&)>;

namespace detail {

// ln x beyond which doubling orbits stop carrying x_k itself (~10^6 digits).
inline constexpr double log_x_carry_limit = 2.3e6;

inline int product_sign(const RecurrenceMap& m) { return m.family() == Family::logistic_plus ? +1 : -1; }

inline void require_kind(const RecurrenceMap& m, DecayKind k, std::string_view op) {
  if (m.kind() != k)
    throw ClassificationError(std::string(op) + " requires a " + std::string(to_string(k)) + " map, got " +
                              to_string(m) + " (" + std::string(to_string(m.kind())) + ")");
}

}  // namespace detail

/// Iterates to x_{k_max}.  Only the last record is retained; intermediate
/// records are streamed to `on_record` when given.
inline OrbitRecord iterate(const RecurrenceMap& map, const PrecisionPolicy& policy, long k_max,
                           const OrbitCallback& on_record = {}) {
  if (k_max < 0) throw std::invalid_argument("k_max must be >= 0");
  WorkingPrecision guard(policy.working_digits(k_max) + (map.kind() == DecayKind::doubling_growth ? 20 : 0));
  OrbitRecord rec;
  rec.x = map.x0().value();
  const bool geometric = map.kind() == DecayKind::geometric_decay;
  const bool doubling = map.kind() == DecayKind::doubling_growth;
  const int sign = detail::product_sign(map);
  if (geometric) rec.running_product = *rec.x;
  if (doubling) rec.log_x = log(*rec.x);
  if (on_record) on_record(rec);
  for (long k = 1; k <= k_max; ++k) {
    if (rec.x) {
      const Real& prev = *rec.x;
      if (geometric) *rec.running_product *= sign > 0 ? Real(1) + prev : Real(1) - prev;
      if (doubling) {
        Real next = map.step(prev);
        rec.log_x = log(next);
        if (rec.log_x->to_double() > detail::log_x_carry_limit) rec.x.reset();
        else rec.x = std::move(next);
      } else {
        rec.x = map.step(prev);
      }
    } else {
      // Log-domain continuation: ln f(x) = 2 ln x + correction(ln x).
      const Real& L = *rec.log_x;
      Real e = exp(-L);
      switch (map.family()) {
        case Family::logistic_plus: rec.log_x = ldexp(L, 1) + log1p(e); break;
        case Family::sylvester: rec.log_x = ldexp(L, 1) + log1p(e * e - e); break;
        case Family::pythagorean: rec.log_x = ldexp(L, 1) - log(Real(2)) + log1p(e * e); break;
        default: throw DomainViolation("log-domain continuation for a non-doubling map");
      }
    }
    rec.k = k;
    if (on_record) on_record(rec);
  }
  return rec;
}

/// Exact rational orbit x_0..x_{k_max} (rational families only).
inline std::vector<Rational> exact_orbit(const RecurrenceMap& map, long k_max) {
  auto x0 = map.x0().exact();
  if (!x0) throw DomainViolation("exact orbit needs a rational starting value");
  std::vector<Rational> out{*x0};
  out.reserve(static_cast<size_t>(k_max) + 1);
  for (long k = 1; k <= k_max; ++k) out.push_back(map.step(out.back()));
  return out;
}

/// P_n = x0 * prod_{j=0}^{n-1} (1 - x_j)  (logistic)  or  (1 + x_j)  (logistic-plus).
inline Real partial_product(const RecurrenceMap& map, const PrecisionPolicy& policy, long n) {
  detail::require_kind(map, DecayKind::geometric_decay, "partial_product");
  auto rec = iterate(map, policy, n);
  return *rec.running_product;
}

/// Geometric envelope ratio rho with x_{j+1} <= rho x_j: p for logistic,
/// 1 - epsilon for logistic-plus.
inline Rational envelope_ratio(const RecurrenceMap& map) {
  detail::require_kind(map, DecayKind::geometric_decay, "envelope_ratio");
  if (map.family() == Family::logistic) return map.spec().p;
  if (map.x0().surd) {
    // 1 - epsilon = p (1 + x0); bound x0 above by a rational.
    WorkingPrecision wp(40);
    Rational x0_up(map.x0().value().to_double() * (1 + 1e-12));
    return map.spec().p * (1 + x0_up);
  }
  return 1 - map.epsilon();
}

namespace detail {

inline Real tail_bound_from(const RecurrenceMap& map, const Real& x_n) {
  if (!(x_n < Real(Rational(1, 2))))
    throw ClassificationError("product_tail_bound: envelope hypothesis x_n < 1/2 unmet");
  const Real rho(envelope_ratio(map));
  // Sum over j>=n of the bound on |ln(1 -/+ x_j)|, with x_j <= x_n rho^(j-n):
  //   logistic:      |ln(1-x)| <= x/(1-x) <= x/(1-x_n)
  //   logistic-plus: ln(1+x) <= x
  Real bound = x_n / (Real(1) - rho);
  if (map.family() == Family::logistic) bound /= Real(1) - x_n;
  // Cover rounding in x_n.
  return bound * Real(Rational(1048577, 1048576));
}

}  // namespace detail

/// Rigorous B_n >= |ln(C / P_n)| for a geometric-decay map.
inline Real product_tail_bound(const RecurrenceMap& map, const PrecisionPolicy& policy, long n) {
  detail::require_kind(map, DecayKind::geometric_decay, "product_tail_bound");
  auto rec = iterate(map, policy, n);
  WorkingPrecision guard(policy.working_digits(n));
  return detail::tail_bound_from(map, *rec.x);
}

/// Default depth for geometric decay: ceil((target+5) ln 10 / |ln rho|).
inline long default_geometric_depth(const RecurrenceMap& map, int target_digits) {
  const double rho = envelope_ratio(map).get_d();
  return static_cast<long>(std::ceil((target_digits + 5) * std::log(10.0) / std::fabs(std::log(rho))));
}

/// Doubling-growth families: the exponent shift e in C = lim x_k^(2^-(k+e))
/// (1 for Sylvester's sequence, whose limit is the square root).
inline long doubling_exponent_shift(const RecurrenceMap& map) {
  detail::require_kind(map, DecayKind::doubling_growth, "doubling_exponent_shift");
  return map.family() == Family::sylvester ? 1 : 0;
}

/// L_k = ln x_k for k = 0..k_max, iterated in the log domain:
///   logistic-plus (p=1):  L_k = 2 L_{k-1} + ln(1 + e^{-L_{k-1}})
///   sylvester:            L_k = 2 L_{k-1} + ln(1 - e^{-L_{k-1}} + e^{-2 L_{k-1}})
///   pythagorean:          L_k = 2 L_{k-1} - ln 2 + ln(1 + e^{-2 L_{k-1}})
/// Values are returned at working precision plus room for the 2^k growth.
inline std::vector<Real> doubling_log_orbit(const RecurrenceMap& map, const PrecisionPolicy& policy, long k_max) {
  detail::require_kind(map, DecayKind::doubling_growth, "doubling_log_orbit");
  const int extra = static_cast<int>(std::ceil(static_cast<double>(k_max) * 0.30103)) + 5;
  WorkingPrecision guard(policy.working_digits(k_max) + extra);
  std::vector<Real> L;
  L.reserve(static_cast<size_t>(k_max) + 1);
  L.push_back(log(map.x0().value()));
  const Real ln2 = log(Real(2));
  for (long k = 1; k <= k_max; ++k) {
    const Real& prev = L.back();
    Real e = exp(-prev);
    switch (map.family()) {
      case Family::logistic_plus: L.push_back(ldexp(prev, 1) + log1p(e)); break;
      case Family::sylvester: L.push_back(ldexp(prev, 1) + log1p(e * e - e)); break;
      case Family::pythagorean: L.push_back(ldexp(prev, 1) - ln2 + log1p(e * e)); break;
      default: throw ClassificationError("no log-domain rearrangement for " + to_string(map));
    }
  }
  return L;
}

/// correction_k = L_{k+1} - 2 L_k (+ ln 2 for pythagorean): the part of the
/// log step that decays doubly exponentially.
inline std::vector<Real> doubling_corrections(const RecurrenceMap& map, const std::vector<Real>& L) {
  std::vector<Real> out;
  if (L.size() < 2) return out;
  const Real ln2 = log(Real(2));
  for (size_t k = 0; k + 1 < L.size(); ++k) {
    Real c = L[k + 1] - ldexp(L[k], 1);
    if (map.family() == Family::pythagorean) c += ln2;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace iterasym

#endif  // ITERASYM_ORBIT_HPP
