#ifndef ITERASYM_NUMERIC_HPP
#define ITERASYM_NUMERIC_HPP

// Exact rationals (GMP) and a working-precision real type (MPFR).
//
// Precision model: every Real is created at the calling thread's current
// working precision, which is set with a WorkingPrecision guard.  Results of
// arithmetic take the working precision in effect when they are computed, so
// a computation nested inside a guard is fully determined by that guard.

#include <gmpxx.h>
#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace iterasym {

using Rational = mpq_class;
using Integer = mpz_class;

/// Raised when a textual number cannot be read as an exact rational.
class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

inline long bits_for_digits(long digits) {
  return static_cast<long>(std::ceil(static_cast<double>(digits) * 3.3219280948873623)) + 8;
}

inline thread_local long working_bits = bits_for_digits(30);

}  // namespace detail

/// Parses "a", "-a", "a/b", or a decimal literal "1.25", "-0.35", "2e-3"
/// into an exact rational.
inline Rational parse_rational(std::string_view text) {
  auto s = detail::trim(text);
  if (s.empty()) throw ParseError("empty number");
  bool negative = false;
  if (s.front() == '+' || s.front() == '-') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  Rational value;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto num = detail::trim(s.substr(0, slash));
    auto den = detail::trim(s.substr(slash + 1));
    if (!detail::all_digits(num) || !detail::all_digits(den))
      throw ParseError("not a rational: '" + std::string(text) + "'");
    Integer n{std::string(num), 10}, d{std::string(den), 10};
    if (d == 0) throw ParseError("zero denominator in '" + std::string(text) + "'");
    value = Rational(n, d);
    value.canonicalize();
  } else {
    long exponent = 0;
    std::string_view mantissa = s;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
      mantissa = s.substr(0, e);
      auto exp_text = s.substr(e + 1);
      bool exp_negative = false;
      if (!exp_text.empty() && (exp_text.front() == '+' || exp_text.front() == '-')) {
        exp_negative = exp_text.front() == '-';
        exp_text.remove_prefix(1);
      }
      if (!detail::all_digits(exp_text) || exp_text.size() > 6)
        throw ParseError("bad exponent in '" + std::string(text) + "'");
      exponent = std::stol(std::string(exp_text));
      if (exp_negative) exponent = -exponent;
    }
    std::string digits;
    auto dot = mantissa.find('.');
    if (dot == std::string_view::npos) {
      digits = std::string(mantissa);
    } else {
      digits = std::string(mantissa.substr(0, dot)) + std::string(mantissa.substr(dot + 1));
      exponent -= static_cast<long>(mantissa.size() - dot - 1);
    }
    if (!detail::all_digits(digits)) throw ParseError("not a number: '" + std::string(text) + "'");
    Integer n(digits, 10);
    Integer scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
    value = exponent >= 0 ? Rational(n * scale) : Rational(n, scale);
    value.canonicalize();
  }
  if (negative) value = -value;
  return value;
}

/// "p/q" (or "p" when q = 1), always reduced.
inline std::string to_string(const Rational& r) {
  Rational c = r;
  c.canonicalize();
  return c.get_str();
}

inline Integer binomial_int(unsigned long n, unsigned long k) {
  Integer out;
  mpz_bin_uiui(out.get_mpz_t(), n, k);
  return out;
}

/// Generalized binomial coefficient binom(a, j) for rational a.
inline Rational binomial(const Rational& a, unsigned long j) {
  Rational out = 1;
  for (unsigned long i = 0; i < j; ++i) out = out * (a - i) / (i + 1);
  return out;
}

/// Exact rational power r^(num/den) when it is rational, e.g. 4^(1/2) = 2,
/// (1/8)^(-2/3) = 4.  Returns false when the result is irrational.
inline bool exact_rational_power(const Rational& base, const Rational& exponent, Rational& out) {
  Rational e = exponent;
  e.canonicalize();
  if (base == 0) {
    if (e <= 0) return false;
    out = 0;
    return true;
  }
  if (!mpz_fits_ulong_p(e.get_den_mpz_t())) return false;
  const unsigned long den = mpz_get_ui(e.get_den_mpz_t());
  Integer num_exp = e.get_num();
  if (!mpz_fits_slong_p(num_exp.get_mpz_t())) return false;
  const long pw = mpz_get_si(num_exp.get_mpz_t());
  Integer bn = base.get_num(), bd = base.get_den();
  if (bn < 0) {
    if (den % 2 == 0) return false;
    bn = -bn;
  }
  Integer rn, rd;
  if (!mpz_root(rn.get_mpz_t(), bn.get_mpz_t(), den)) return false;
  if (!mpz_root(rd.get_mpz_t(), bd.get_mpz_t(), den)) return false;
  if (base < 0) rn = -rn;
  Rational root(rn, rd);
  Rational result = 1;
  const unsigned long apw = static_cast<unsigned long>(pw < 0 ? -pw : pw);
  for (unsigned long i = 0; i < apw; ++i) result *= root;
  if (pw < 0) result = 1 / result;
  result.canonicalize();
  out = result;
  return true;
}

/// Sets the calling thread's working precision (decimal digits) for the
/// lifetime of the guard.
class WorkingPrecision {
 public:
  explicit WorkingPrecision(long digits) : saved_(detail::working_bits) {
    detail::working_bits = detail::bits_for_digits(digits);
  }
  ~WorkingPrecision() { detail::working_bits = saved_; }
  WorkingPrecision(const WorkingPrecision&) = delete;
  WorkingPrecision& operator=(const WorkingPrecision&) = delete;

  static long bits() { return detail::working_bits; }
  static long digits() {
    return static_cast<long>(std::floor(static_cast<double>(detail::working_bits - 8) / 3.3219280948873623));
  }

 private:
  long saved_;
};

/// Arbitrary-precision real, correctly rounded (MPFR, round-to-nearest).
class Real {
 public:
  Real() { mpfr_init2(v_, detail::working_bits); mpfr_set_zero(v_, 1); }
  Real(long x) { mpfr_init2(v_, detail::working_bits); mpfr_set_si(v_, x, MPFR_RNDN); }
  Real(int x) : Real(static_cast<long>(x)) {}
  Real(unsigned long x) { mpfr_init2(v_, detail::working_bits); mpfr_set_ui(v_, x, MPFR_RNDN); }
  explicit Real(double x) { mpfr_init2(v_, detail::working_bits); mpfr_set_d(v_, x, MPFR_RNDN); }
  explicit Real(const Rational& q) { mpfr_init2(v_, detail::working_bits); mpfr_set_q(v_, q.get_mpq_t(), MPFR_RNDN); }
  explicit Real(const Integer& z) { mpfr_init2(v_, detail::working_bits); mpfr_set_z(v_, z.get_mpz_t(), MPFR_RNDN); }
  explicit Real(std::string_view decimal) {
    mpfr_init2(v_, detail::working_bits);
    std::string s(detail::trim(decimal));
    if (mpfr_set_str(v_, s.c_str(), 10, MPFR_RNDN) != 0) {
      mpfr_clear(v_);
      throw ParseError("not a decimal number: '" + s + "'");
    }
  }
  Real(const Real& o) { mpfr_init2(v_, mpfr_get_prec(o.v_)); mpfr_set(v_, o.v_, MPFR_RNDN); }
  Real(Real&& o) noexcept {
    mpfr_init2(v_, MPFR_PREC_MIN);
    mpfr_swap(v_, o.v_);
  }
  Real& operator=(const Real& o) {
    if (this != &o) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
  }
  Real& operator=(Real&& o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~Real() { mpfr_clear(v_); }

  mpfr_srcptr get() const { return v_; }
  mpfr_ptr get() { return v_; }
  long precision_bits() const { return static_cast<long>(mpfr_get_prec(v_)); }

  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  bool is_finite() const { return mpfr_number_p(v_) != 0; }
  int sign() const { return mpfr_sgn(v_); }
  /// Binary exponent e with 0.5 <= |x|/2^e < 1.
  long exponent2() const { return is_zero() ? std::numeric_limits<long>::min() : static_cast<long>(mpfr_get_exp(v_)); }

  Real& operator+=(const Real& o) { mpfr_add(v_, v_, o.v_, MPFR_RNDN); return *this; }
  Real& operator-=(const Real& o) { mpfr_sub(v_, v_, o.v_, MPFR_RNDN); return *this; }
  Real& operator*=(const Real& o) { mpfr_mul(v_, v_, o.v_, MPFR_RNDN); return *this; }
  Real& operator/=(const Real& o) { mpfr_div(v_, v_, o.v_, MPFR_RNDN); return *this; }

  friend Real operator+(const Real& a, const Real& b) { Real r; mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN); return r; }
  friend Real operator-(const Real& a, const Real& b) { Real r; mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN); return r; }
  friend Real operator*(const Real& a, const Real& b) { Real r; mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN); return r; }
  friend Real operator/(const Real& a, const Real& b) { Real r; mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN); return r; }
  friend Real operator-(const Real& a) { Real r; mpfr_neg(r.v_, a.v_, MPFR_RNDN); return r; }

  friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
  friend std::partial_ordering operator<=>(const Real& a, const Real& b) {
    if (mpfr_unordered_p(a.v_, b.v_)) return std::partial_ordering::unordered;
    const int c = mpfr_cmp(a.v_, b.v_);
    return c < 0 ? std::partial_ordering::less : c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent;
  }

  /// Bit-level identity including precision.
  bool identical(const Real& o) const {
    return mpfr_get_prec(v_) == mpfr_get_prec(o.v_) &&
           (mpfr_equal_p(v_, o.v_) != 0 || (mpfr_nan_p(v_) && mpfr_nan_p(o.v_)));
  }

 private:
  mpfr_t v_;
};

#define ITERASYM_UNARY_MPFR(name, fn)            \
  inline Real name(const Real& x) {              \
    Real r;                                      \
    fn(r.get(), x.get(), MPFR_RNDN);             \
    return r;                                    \
  }
ITERASYM_UNARY_MPFR(sqrt, mpfr_sqrt)
ITERASYM_UNARY_MPFR(exp, mpfr_exp)
ITERASYM_UNARY_MPFR(log, mpfr_log)
ITERASYM_UNARY_MPFR(log1p, mpfr_log1p)
ITERASYM_UNARY_MPFR(expm1, mpfr_expm1)
ITERASYM_UNARY_MPFR(log10, mpfr_log10)
ITERASYM_UNARY_MPFR(cos, mpfr_cos)
ITERASYM_UNARY_MPFR(abs, mpfr_abs)
#undef ITERASYM_UNARY_MPFR

/// x * 2^e, exact.
inline Real ldexp(const Real& x, long e) {
  Real r;
  mpfr_mul_2si(r.get(), x.get(), e, MPFR_RNDN);
  return r;
}

inline Real pow(const Real& x, const Real& y) {
  Real r;
  mpfr_pow(r.get(), x.get(), y.get(), MPFR_RNDN);
  return r;
}

inline Real pow_int(const Real& x, long n) {
  Real r;
  mpfr_pow_si(r.get(), x.get(), n, MPFR_RNDN);
  return r;
}

/// x^(num/den) for x > 0 with a rational exponent; integer and dyadic
/// exponents avoid representing the exponent in binary.
inline Real pow(const Real& x, const Rational& e) {
  Rational c = e;
  c.canonicalize();
  if (c.get_den() == 1 && mpz_fits_slong_p(c.get_num_mpz_t())) return pow_int(x, mpz_get_si(c.get_num_mpz_t()));
  if (mpz_fits_slong_p(c.get_num_mpz_t()) && mpz_fits_ulong_p(c.get_den_mpz_t())) {
    const long num = mpz_get_si(c.get_num_mpz_t());
    const unsigned long den = mpz_get_ui(c.get_den_mpz_t());
    const long saved = detail::working_bits;
    detail::working_bits = saved + 32;
    Real inner = pow_int(x, num);
    Real root;
    mpfr_rootn_ui(root.get(), inner.get(), den, MPFR_RNDN);
    detail::working_bits = saved;
    Real out;
    mpfr_set(out.get(), root.get(), MPFR_RNDN);
    return out;
  }
  return pow(x, Real(c));
}

inline Real pi() {
  Real r;
  mpfr_const_pi(r.get(), MPFR_RNDN);
  return r;
}

/// Decimal rendering with `digits` significant digits, fixed notation when
/// the magnitude allows, scientific otherwise.
inline std::string to_decimal(const Real& x, int digits) {
  if (mpfr_nan_p(x.get())) return "nan";
  if (mpfr_inf_p(x.get())) return x.sign() < 0 ? "-inf" : "inf";
  if (x.is_zero()) return "0";
  mpfr_exp_t exp10 = 0;
  char* raw = mpfr_get_str(nullptr, &exp10, 10, static_cast<size_t>(std::max(digits, 1)), x.get(), MPFR_RNDN);
  std::string mant(raw);
  mpfr_free_str(raw);
  std::string sign;
  if (!mant.empty() && mant.front() == '-') {
    sign = "-";
    mant.erase(0, 1);
  }
  // value = 0.mant * 10^exp10
  std::string out;
  const long e = static_cast<long>(exp10);
  if (e > 40 || e < -20) {
    out = mant.substr(0, 1) + "." + mant.substr(1) + "e" + std::to_string(e - 1);
  } else if (e <= 0) {
    out = "0." + std::string(static_cast<size_t>(-e), '0') + mant;
  } else if (static_cast<size_t>(e) >= mant.size()) {
    out = mant + std::string(static_cast<size_t>(e) - mant.size(), '0');
  } else {
    out = mant.substr(0, static_cast<size_t>(e)) + "." + mant.substr(static_cast<size_t>(e));
  }
  return sign + out;
}

inline std::ostream& operator<<(std::ostream& os, const Real& x) {
  const auto prec = os.precision();
  return os << to_decimal(x, static_cast<int>(prec > 0 ? prec : 17));
}

/// Number of leading significant decimal digits on which a and b agree,
/// floor(-log10(|a-b|/|b|)), capped at `cap`.
inline int agreeing_digits(const Real& a, const Real& b, int cap = 1000) {
  Real diff = abs(a - b);
  if (diff.is_zero()) return cap;
  Real scale = abs(b).is_zero() ? Real(1) : abs(b);
  const double d = -log10(diff / scale).to_double();
  if (!std::isfinite(d)) return cap;
  return std::clamp(static_cast<int>(std::floor(d)), 0, cap);
}

/// Number of decimal places written after the point in a literal like
/// "0.196453426377889".
inline int decimals_in(std::string_view literal) {
  auto dot = literal.find('.');
  if (dot == std::string_view::npos) return 0;
  return static_cast<int>(literal.size() - dot - 1);
}

/// True when `value` reproduces every printed digit of the (possibly
/// truncated) reference literal: |value - ref| < 10^-decimals.
inline bool matches_printed(const Real& value, std::string_view reference) {
  Real ref(reference);
  Real tol = pow_int(Real(10), -decimals_in(reference));
  return abs(value - ref) < tol;
}

}  // namespace iterasym

#endif  // ITERASYM_NUMERIC_HPP
