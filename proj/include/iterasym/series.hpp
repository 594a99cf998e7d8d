#ifndef ITERASYM_SERIES_HPP
#define ITERASYM_SERIES_HPP

// Exact truncated asymptotic series in the scale ln(k)^m k^(-alpha):
//
//     S(k) = sum Q_{alpha,m}(C) ln(k)^m / k^alpha  +  O(k^-(N+)),
//
// alpha rational, Q a polynomial in the symbol C with rational coefficients,
// N the truncation order.  Terms with alpha > N are unknown and never
// manufactured by the algebra.  An "exact" series has no truncation: it is
// the finite sum itself.

#include <iterasym/numeric.hpp>

#include <json.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace iterasym {

/// Algebra request outside the series' domain (e.g. composing with a
/// non-vanishing inner series, irrational leading power).
class SeriesError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// ---------------------------------------------------------------------------
// CoeffPoly: polynomial in C, ascending powers, no trailing zeros.

class CoeffPoly {
 public:
  CoeffPoly() = default;
  CoeffPoly(const Rational& c) {  // NOLINT: implicit constant polynomial
    if (c != 0) c_.push_back(c);
  }
  CoeffPoly(long c) : CoeffPoly(Rational(c)) {}  // NOLINT
  explicit CoeffPoly(std::vector<Rational> coeffs) : c_(std::move(coeffs)) { normalize(); }

  /// The polynomial C itself.
  static CoeffPoly symbol() { return CoeffPoly(std::vector<Rational>{0, 1}); }

  bool is_zero() const { return c_.empty(); }
  bool is_constant() const { return c_.size() <= 1; }
  /// -1 for the zero polynomial.
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  Rational coeff(size_t i) const { return i < c_.size() ? c_[i] : Rational(0); }
  Rational constant() const { return coeff(0); }
  const std::vector<Rational>& coeffs() const { return c_; }

  CoeffPoly& operator+=(const CoeffPoly& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
    for (size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
    normalize();
    return *this;
  }
  CoeffPoly& operator-=(const CoeffPoly& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
    for (size_t i = 0; i < o.c_.size(); ++i) c_[i] -= o.c_[i];
    normalize();
    return *this;
  }
  CoeffPoly& operator*=(const Rational& r) {
    if (r == 0) {
      c_.clear();
      return *this;
    }
    for (auto& x : c_) x *= r;
    return *this;
  }
  friend CoeffPoly operator+(CoeffPoly a, const CoeffPoly& b) { return a += b; }
  friend CoeffPoly operator-(CoeffPoly a, const CoeffPoly& b) { return a -= b; }
  friend CoeffPoly operator-(CoeffPoly a) { return a *= Rational(-1); }
  friend CoeffPoly operator*(CoeffPoly a, const Rational& r) { return a *= r; }
  friend CoeffPoly operator*(const Rational& r, CoeffPoly a) { return a *= r; }
  friend CoeffPoly operator*(const CoeffPoly& a, const CoeffPoly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<Rational> out(a.c_.size() + b.c_.size() - 1);
    for (size_t i = 0; i < a.c_.size(); ++i)
      for (size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
    return CoeffPoly(std::move(out));
  }
  CoeffPoly& operator*=(const CoeffPoly& o) { return *this = *this * o; }
  friend bool operator==(const CoeffPoly& a, const CoeffPoly& b) { return a.c_ == b.c_; }

  CoeffPoly derivative() const {
    std::vector<Rational> out;
    for (size_t i = 1; i < c_.size(); ++i) out.push_back(c_[i] * static_cast<unsigned long>(i));
    return CoeffPoly(std::move(out));
  }

  Real evaluate(const Real& C) const {
    Real acc;
    for (size_t i = c_.size(); i-- > 0;) acc = acc * C + Real(c_[i]);
    return acc;
  }

  /// Plain text, descending powers: "12*C^2 - 12*C + 8".
  std::string str() const {
    if (c_.empty()) return "0";
    std::string out;
    for (size_t i = c_.size(); i-- > 0;) {
      if (c_[i] == 0) continue;
      Rational a = abs(c_[i]);
      const bool neg = c_[i] < 0;
      if (out.empty()) out += neg ? "-" : "";
      else out += neg ? " - " : " + ";
      if (i == 0 || a != 1) out += to_string(a);
      if (i > 0) {
        if (a != 1) out += "*";
        out += "C";
        if (i > 1) out += "^" + std::to_string(i);
      }
    }
    return out;
  }

  std::string latex() const {
    if (c_.empty()) return "0";
    std::string out;
    for (size_t i = c_.size(); i-- > 0;) {
      if (c_[i] == 0) continue;
      Rational a = abs(c_[i]);
      const bool neg = c_[i] < 0;
      if (out.empty()) out += neg ? "-" : "";
      else out += neg ? " - " : " + ";
      if (i == 0 || a != 1) {
        if (a.get_den() == 1) out += a.get_num().get_str();
        else out += "\\frac{" + a.get_num().get_str() + "}{" + a.get_den().get_str() + "}";
      }
      if (i > 0) {
        out += "C";
        if (i > 1) out += "^{" + std::to_string(i) + "}";
      }
    }
    return out;
  }

  /// Composition with another polynomial: this(inner(C)).
  CoeffPoly compose(const CoeffPoly& inner) const {
    CoeffPoly acc;
    for (size_t i = c_.size(); i-- > 0;) acc = acc * inner + CoeffPoly(c_[i]);
    return acc;
  }

 private:
  void normalize() {
    for (auto& x : c_) x.canonicalize();
    while (!c_.empty() && c_.back() == 0) c_.pop_back();
  }
  std::vector<Rational> c_;
};

// ---------------------------------------------------------------------------

struct TermKey {
  Rational alpha;  // exponent of 1/k
  int ln_power = 0;

  friend bool operator==(const TermKey& a, const TermKey& b) { return a.alpha == b.alpha && a.ln_power == b.ln_power; }
};

/// Sort order: alpha ascending, then ln power descending (the order in which
/// terms are written, dominant first).
struct TermKeyLess {
  bool operator()(const TermKey& a, const TermKey& b) const {
    const int c = cmp(a.alpha, b.alpha);
    if (c != 0) return c < 0;
    return a.ln_power > b.ln_power;
  }
};

class AsymptoticSeries {
 public:
  using TermMap = std::map<TermKey, CoeffPoly, TermKeyLess>;

  AsymptoticSeries() = default;

  /// Zero with the given truncation order.
  static AsymptoticSeries zero(const Rational& truncation) {
    AsymptoticSeries s;
    s.truncation_ = truncation;
    s.truncation_->canonicalize();
    return s;
  }
  /// Exact monomial coeff * ln(k)^m / k^alpha.
  static AsymptoticSeries monomial(const CoeffPoly& coeff, const Rational& alpha, int ln_power = 0) {
    AsymptoticSeries s;
    s.add_term({alpha, ln_power}, coeff);
    return s;
  }
  static AsymptoticSeries constant(const CoeffPoly& c) { return monomial(c, 0, 0); }

  const TermMap& terms() const { return terms_; }
  bool is_exact() const { return !truncation_.has_value(); }
  const std::optional<Rational>& truncation() const { return truncation_; }
  Rational truncation_order() const {
    if (!truncation_) throw SeriesError("exact series has no truncation order");
    return *truncation_;
  }
  bool empty() const { return terms_.empty(); }
  size_t size() const { return terms_.size(); }

  /// Coefficient of ln(k)^m / k^alpha (zero when absent).
  CoeffPoly coeff(const Rational& alpha, int ln_power = 0) const {
    auto it = terms_.find({alpha, ln_power});
    return it == terms_.end() ? CoeffPoly{} : it->second;
  }

  /// Adds to a coefficient; terms beyond the truncation are discarded.
  void add_term(const TermKey& key, const CoeffPoly& c) {
    if (c.is_zero()) return;
    if (truncation_ && key.alpha > *truncation_) return;
    if (key.ln_power < 0) throw SeriesError("negative ln power");
    // Keys compare with mpq ==, which assumes canonical form.
    TermKey k = key;
    k.alpha.canonicalize();
    auto [it, inserted] = terms_.try_emplace(k, c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }
  void set_term(const TermKey& key, const CoeffPoly& c) {
    TermKey k = key;
    k.alpha.canonicalize();
    terms_.erase(k);
    add_term(key, c);
  }

  /// Lower bound on the smallest alpha present (the valuation); for an empty
  /// truncated series this is its truncation order.
  Rational valuation() const {
    if (!terms_.empty()) return terms_.begin()->first.alpha;
    if (truncation_) return *truncation_;
    throw SeriesError("valuation of the exact zero series");
  }
  bool is_exact_zero() const { return terms_.empty() && !truncation_; }

  /// Largest ln power present.
  int max_ln_power() const {
    int m = 0;
    for (const auto& [k, c] : terms_) m = std::max(m, k.ln_power);
    return m;
  }

  /// Copy with truncation min(current, order).
  AsymptoticSeries truncated(const Rational& order) const {
    AsymptoticSeries out;
    out.truncation_ = truncation_ ? std::min(*truncation_, order) : order;
    out.truncation_->canonicalize();
    for (const auto& [k, c] : terms_)
      if (k.alpha <= *out.truncation_) out.terms_.emplace(k, c);
    return out;
  }

  /// Terms with alpha <= order, as an exact finite sum.
  AsymptoticSeries head(const Rational& order) const {
    AsymptoticSeries out;
    for (const auto& [k, c] : terms_)
      if (k.alpha <= order) out.terms_.emplace(k, c);
    return out;
  }

  AsymptoticSeries& operator+=(const AsymptoticSeries& o) {
    if (o.truncation_ && (!truncation_ || *o.truncation_ < *truncation_)) {
      truncation_ = o.truncation_;
      for (auto it = terms_.begin(); it != terms_.end();) {
        if (it->first.alpha > *truncation_) it = terms_.erase(it);
        else ++it;
      }
    }
    for (const auto& [k, c] : o.terms_) add_term(k, c);
    return *this;
  }
  AsymptoticSeries& operator-=(const AsymptoticSeries& o) { return *this += -o; }
  AsymptoticSeries& operator*=(const Rational& r) {
    if (r == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& [k, c] : terms_) c *= r;
    return *this;
  }
  AsymptoticSeries& operator*=(const CoeffPoly& p) {
    TermMap out;
    for (const auto& [k, c] : terms_) {
      CoeffPoly prod = c * p;
      if (!prod.is_zero()) out.emplace(k, std::move(prod));
    }
    terms_ = std::move(out);
    return *this;
  }
  friend AsymptoticSeries operator+(AsymptoticSeries a, const AsymptoticSeries& b) { return a += b; }
  friend AsymptoticSeries operator-(AsymptoticSeries a, const AsymptoticSeries& b) { return a -= b; }
  friend AsymptoticSeries operator-(AsymptoticSeries a) { return a *= Rational(-1); }
  friend AsymptoticSeries operator*(AsymptoticSeries a, const Rational& r) { return a *= r; }
  friend AsymptoticSeries operator*(const Rational& r, AsymptoticSeries a) { return a *= r; }
  friend AsymptoticSeries operator*(AsymptoticSeries a, const CoeffPoly& p) { return a *= p; }

  friend AsymptoticSeries operator*(const AsymptoticSeries& a, const AsymptoticSeries& b) { return multiply(a, b); }

  /// Multiplication by ln(k)^m / k^alpha (exact).
  AsymptoticSeries times_scale(const Rational& alpha, int ln_power = 0) const {
    AsymptoticSeries out;
    if (truncation_) out.truncation_ = *truncation_ + alpha;
    for (const auto& [k, c] : terms_) out.terms_.emplace(TermKey{k.alpha + alpha, k.ln_power + ln_power}, c);
    return out;
  }

  /// Equality of terms and truncation.
  friend bool operator==(const AsymptoticSeries& a, const AsymptoticSeries& b) {
    return a.truncation_ == b.truncation_ && a.terms_ == b.terms_;
  }
  /// Equality of the terms up to (and including) `order`, ignoring truncation.
  bool agrees_through(const AsymptoticSeries& o, const Rational& order) const {
    return head(order).terms_ == o.head(order).terms_;
  }

  static AsymptoticSeries multiply(const AsymptoticSeries& a, const AsymptoticSeries& b) {
    AsymptoticSeries out;
    if (a.is_exact_zero() || b.is_exact_zero()) return out;
    // Error of a*b is (err a)*b + a*(err b).
    std::optional<Rational> tr;
    if (a.truncation_) tr = *a.truncation_ + b.valuation();
    if (b.truncation_) {
      Rational t = *b.truncation_ + a.valuation();
      if (!tr || t < *tr) tr = t;
    }
    out.truncation_ = tr;
    for (const auto& [ka, ca] : a.terms_) {
      for (const auto& [kb, cb] : b.terms_) {
        Rational alpha = ka.alpha + kb.alpha;
        if (tr && alpha > *tr) break;  // b sorted by alpha
        out.add_term({std::move(alpha), ka.ln_power + kb.ln_power}, ca * cb);
      }
    }
    return out;
  }

 private:
  TermMap terms_;
  std::optional<Rational> truncation_;
};

// ---------------------------------------------------------------------------
// Substitution and composition.

namespace detail {

/// ln(1 + 1/k) = sum_{j>=1} (-1)^(j+1) / (j k^j), exact through `order`.
inline AsymptoticSeries log1p_inv_k(const Rational& order) {
  AsymptoticSeries s = AsymptoticSeries::zero(order);
  for (long j = 1; Rational(j) <= order; ++j) s.add_term({Rational(j), 0}, Rational(j % 2 ? 1 : -1, j));
  return s;
}

/// (1 + 1/k)^(-alpha) = sum_j binom(-alpha, j) k^-j, exact through `order`.
inline AsymptoticSeries binomial_inv_k(const Rational& alpha, const Rational& order) {
  AsymptoticSeries s = AsymptoticSeries::zero(order);
  const Rational a = -alpha;
  Rational b = 1;
  for (long j = 0; Rational(j) <= order; ++j) {
    s.add_term({Rational(j), 0}, b);
    b = b * (a - j) / (j + 1);
  }
  return s;
}

}  // namespace detail

/// Re-expresses S(k+1) in the scale of k, exact through `order`:
///   (k+1)^-a = k^-a sum_j binom(-a, j) k^-j,
///   ln(k+1)  = ln k + sum_{j>=1} (-1)^(j+1) / (j k^j).
inline AsymptoticSeries shift_k(const AsymptoticSeries& s, const Rational& order) {
  const Rational top = s.truncation() ? std::min(order, *s.truncation()) : order;
  AsymptoticSeries out = AsymptoticSeries::zero(top);
  if (s.empty()) return out;
  const Rational rel = top - s.valuation();
  if (rel < 0) return out;
  const AsymptoticSeries L1 = detail::log1p_inv_k(rel);
  std::vector<AsymptoticSeries> L1_pow{AsymptoticSeries::zero(rel) + AsymptoticSeries::constant(Rational(1))};
  const int mmax = s.max_ln_power();
  for (int i = 1; i <= mmax; ++i) L1_pow.push_back((L1_pow.back() * L1).truncated(rel));
  // Group by alpha: the binomial factor is shared by all ln powers.
  auto it = s.terms().begin();
  while (it != s.terms().end()) {
    const Rational alpha = it->first.alpha;
    const Rational r = top - alpha;
    if (r < 0) break;
    AsymptoticSeries logpart = AsymptoticSeries::zero(r);
    for (; it != s.terms().end() && it->first.alpha == alpha; ++it) {
      const int m = it->first.ln_power;
      for (int i = 0; i <= m; ++i) {
        Rational b(binomial_int(static_cast<unsigned long>(m), static_cast<unsigned long>(i)));
        logpart += L1_pow[static_cast<size_t>(i)].truncated(r).times_scale(0, m - i) * (it->second * b);
      }
    }
    out += (logpart * detail::binomial_inv_k(alpha, r)).truncated(r).times_scale(alpha);
  }
  return out;
}

inline AsymptoticSeries shift_k(const AsymptoticSeries& s) {
  if (s.is_exact()) throw SeriesError("shift_k of an exact series needs an explicit order");
  return shift_k(s, s.truncation_order());
}

/// Forward difference S(k+1) - S(k).  For a series truncated at N the
/// difference is known through N+1.
inline AsymptoticSeries difference(const AsymptoticSeries& s) {
  if (s.is_exact()) throw SeriesError("difference of an exact series needs a truncation order");
  const Rational n1 = s.truncation_order() + 1;
  AsymptoticSeries ext = s.head(s.truncation_order());  // exact finite sum
  AsymptoticSeries shifted = shift_k(ext, n1);
  AsymptoticSeries out = shifted - ext.truncated(n1);
  return out;
}

/// Replaces ln(k) by ln(k) + t (t a polynomial in C).
inline AsymptoticSeries translate_log(const AsymptoticSeries& s, const CoeffPoly& t) {
  AsymptoticSeries out = s.is_exact() ? AsymptoticSeries{} : AsymptoticSeries::zero(s.truncation_order());
  for (const auto& [key, c] : s.terms()) {
    CoeffPoly tp = Rational(1);
    std::vector<CoeffPoly> tpow{tp};
    for (int i = 1; i <= key.ln_power; ++i) tpow.push_back(tpow.back() * t);
    for (int i = 0; i <= key.ln_power; ++i) {
      Rational b(binomial_int(static_cast<unsigned long>(key.ln_power), static_cast<unsigned long>(i)));
      out.add_term({key.alpha, key.ln_power - i}, c * tpow[static_cast<size_t>(i)] * b);
    }
  }
  return out;
}

/// Replaces the symbol C by a polynomial in C.
inline AsymptoticSeries substitute_symbol(const AsymptoticSeries& s, const CoeffPoly& value) {
  AsymptoticSeries out = s.is_exact() ? AsymptoticSeries{} : AsymptoticSeries::zero(s.truncation_order());
  for (const auto& [key, c] : s.terms()) out.add_term(key, c.compose(value));
  return out;
}

/// S^r for rational r.  The leading monomial c k^-v must have a C-free
/// coefficient, no logarithm, and a rational c^r; then
///   S^r = c^r k^(-r v) (1 + u)^r,  u = S/(c k^-v) - 1,
/// expanded by the binomial series.
inline AsymptoticSeries pow(const AsymptoticSeries& s, const Rational& r) {
  if (s.is_exact()) throw SeriesError("pow of an exact series needs a truncation order");
  if (s.empty()) throw SeriesError("pow of a series with no known leading term");
  const auto& [lead_key, lead_c] = *s.terms().begin();
  if (lead_key.ln_power != 0) throw SeriesError("pow: leading term carries ln(k)");
  if (!lead_c.is_constant()) throw SeriesError("pow: leading coefficient depends on C");
  const Rational c = lead_c.constant();
  Rational c_r;
  if (!exact_rational_power(c, r, c_r))
    throw SeriesError("pow: leading coefficient " + to_string(c) + "^(" + to_string(r) + ") is irrational");
  const Rational v = lead_key.alpha;
  const Rational rel = s.truncation_order() - v;
  // u = S/(c k^-v) - 1, truncated at rel
  AsymptoticSeries u = (s.times_scale(-v) * Rational(1 / c)).truncated(rel);
  u.set_term({0, 0}, CoeffPoly{});
  AsymptoticSeries acc = AsymptoticSeries::zero(rel) + AsymptoticSeries::constant(Rational(1));
  if (!u.empty()) {
    const Rational uv = u.valuation();
    AsymptoticSeries upow = AsymptoticSeries::zero(rel) + AsymptoticSeries::constant(Rational(1));
    for (unsigned long j = 1; uv * j <= rel; ++j) {
      upow = (upow * u).truncated(rel);
      Rational b = binomial(r, j);
      if (b != 0) acc += upow * b;
      if (upow.empty()) break;
    }
  }
  return (acc * c_r).times_scale(r * v);
}

/// sum_n f_n inner^n for a Taylor series f at 0; `inner` must tend to 0.
/// `taylor(n)` supplies f_n.
inline AsymptoticSeries compose_analytic(const std::function<Rational(unsigned long)>& taylor,
                                         const AsymptoticSeries& inner) {
  if (inner.is_exact()) throw SeriesError("compose_analytic: inner series needs a truncation order");
  if (inner.empty()) throw SeriesError("compose_analytic: inner series has no known terms");
  const Rational v = inner.valuation();
  if (v <= 0) throw SeriesError("compose_analytic: inner series does not tend to 0 (has a constant or growing term)");
  AsymptoticSeries out = AsymptoticSeries::constant(CoeffPoly(taylor(0)));
  AsymptoticSeries pw = AsymptoticSeries::constant(CoeffPoly(Rational(1)));
  for (unsigned long n = 1;; ++n) {
    // Every f_m inner^m with m >= n has valuation >= m v.
    if (out.truncation() && v * n > *out.truncation()) break;
    if (n > 4096) throw SeriesError("compose_analytic: Taylor series has no nonzero term past f_0");
    pw = pw * inner;
    const Rational fn = taylor(n);
    if (fn != 0) out += pw * fn;
  }
  return out;
}

/// Same, with f given by its coefficient list; coefficients past the end of
/// the list are zero (f is a polynomial).
inline AsymptoticSeries compose_analytic(std::span<const Rational> taylor, const AsymptoticSeries& inner) {
  return compose_analytic([&](unsigned long n) { return n < taylor.size() ? taylor[n] : Rational(0); }, inner);
}

/// First key (in series order) at which a and b differ among terms with
/// alpha <= through.
inline std::optional<TermKey> first_difference(const AsymptoticSeries& a, const AsymptoticSeries& b,
                                               const Rational& through) {
  std::optional<TermKey> out;
  auto consider = [&](const TermKey& k) {
    if (k.alpha > through || a.coeff(k.alpha, k.ln_power) == b.coeff(k.alpha, k.ln_power)) return;
    if (!out || TermKeyLess{}(k, *out)) out = k;
  };
  for (const auto& [k, c] : a.terms()) consider(k);
  for (const auto& [k, c] : b.terms()) consider(k);
  return out;
}

// ---------------------------------------------------------------------------
// Numerics.

/// Value and C-derivative of S at (k, C), ignoring the truncation remainder.
struct SeriesValue {
  Real value;
  Real d_dC;
};

inline SeriesValue evaluate(const AsymptoticSeries& s, const Real& k, const Real& C) {
  const Real lk = log(k);
  SeriesValue out;
  std::map<Rational, Real> kpow;
  for (const auto& [key, c] : s.terms()) {
    auto it = kpow.find(key.alpha);
    if (it == kpow.end()) it = kpow.emplace(key.alpha, pow(k, Rational(-key.alpha))).first;
    Real scale = it->second * pow_int(lk, key.ln_power);
    out.value += c.evaluate(C) * scale;
    out.d_dC += c.derivative().evaluate(C) * scale;
  }
  return out;
}

/// Contribution of the terms with a given alpha at (k, C).
inline Real evaluate_order(const AsymptoticSeries& s, const Rational& alpha, const Real& k, const Real& C) {
  Real acc;
  const Real lk = log(k);
  for (const auto& [key, c] : s.terms())
    if (key.alpha == alpha) acc += c.evaluate(C) * pow(k, Rational(-key.alpha)) * pow_int(lk, key.ln_power);
  return acc;
}

/// Distinct alphas present, ascending.
inline std::vector<Rational> orders_of(const AsymptoticSeries& s) {
  std::vector<Rational> out;
  for (const auto& [key, c] : s.terms())
    if (out.empty() || out.back() != key.alpha) out.push_back(key.alpha);
  return out;
}

// ---------------------------------------------------------------------------
// Rendering.

/// Human-readable sum, dominant terms first, followed by the O-term.
inline std::string to_text(const AsymptoticSeries& s) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [key, c] : s.terms()) {
    const auto nonzero =
        std::count_if(c.coeffs().begin(), c.coeffs().end(), [](const Rational& x) { return x != 0; });
    const bool neg = nonzero == 1 && c.coeffs().back() < 0;
    const std::string coeff = neg ? (-c).str() : c.str();
    if (!first) os << (neg ? " - " : " + ");
    else if (neg) os << "-";
    first = false;
    std::string num = nonzero > 1 ? "(" + coeff + ")" : coeff;
    if (key.ln_power > 0) {
      std::string ln = key.ln_power > 1 ? "ln(k)^" + std::to_string(key.ln_power) : "ln(k)";
      num = num == "1" ? ln : num + "*" + ln;
    }
    if (key.alpha == 0) {
      os << num;
      continue;
    }
    const Rational a = abs(key.alpha);
    const std::string kpart = a == 1 ? "k" : "k^" + (a.get_den() == 1 ? to_string(a) : "(" + to_string(a) + ")");
    if (key.alpha > 0) os << num << "/" << kpart;
    else os << (num == "1" ? kpart : num + "*" + kpart);
  }
  if (first) os << "0";
  if (s.truncation()) os << " + O(k^-(" << to_string(*s.truncation()) << "+))";
  return os.str();
}

inline std::string to_latex(const AsymptoticSeries& s) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [key, c] : s.terms()) {
    if (!first) os << " + ";
    first = false;
    os << "\\left(" << c.latex() << "\\right)";
    if (key.ln_power > 0) os << "\\ln(k)" << (key.ln_power > 1 ? "^{" + std::to_string(key.ln_power) + "}" : "");
    if (key.alpha > 0) os << "\\frac{1}{k^{" << to_string(key.alpha) << "}}";
    else if (key.alpha < 0) os << "k^{" << to_string(Rational(-key.alpha)) << "}";
  }
  if (first) os << "0";
  return os.str();
}

/// Canonical JSON: a list of {alpha, ln_power, coeff} with coeff listing
/// ascending powers of C as "p/q" strings.
inline nlohmann::json to_json(const AsymptoticSeries& s) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [key, c] : s.terms()) {
    nlohmann::json coeff = nlohmann::json::array();
    for (const auto& x : c.coeffs()) coeff.push_back(to_string(x));
    terms.push_back({{"alpha", to_string(key.alpha)}, {"ln_power", key.ln_power}, {"coeff", coeff}});
  }
  return terms;
}

inline CoeffPoly coeff_poly_from_json(const nlohmann::json& j) {
  std::vector<Rational> c;
  for (const auto& x : j) c.push_back(parse_rational(x.get<std::string>()));
  return CoeffPoly(std::move(c));
}

/// Reads the canonical term list; `truncation` none means exact.
inline AsymptoticSeries series_from_json(const nlohmann::json& terms, std::optional<Rational> truncation) {
  AsymptoticSeries s = truncation ? AsymptoticSeries::zero(*truncation) : AsymptoticSeries{};
  for (const auto& t : terms) {
    TermKey key{parse_rational(t.at("alpha").get<std::string>()), t.at("ln_power").get<int>()};
    if (truncation && key.alpha > *truncation)
      throw SeriesError("term at alpha=" + to_string(key.alpha) + " beyond truncation " + to_string(*truncation));
    s.add_term(key, coeff_poly_from_json(t.at("coeff")));
  }
  return s;
}

}  // namespace iterasym

#endif  // ITERASYM_SERIES_HPP
