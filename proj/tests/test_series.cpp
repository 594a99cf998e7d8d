#include <iterasym/series.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace iterasym;

namespace {

const CoeffPoly C = CoeffPoly::symbol();

AsymptoticSeries mono(const CoeffPoly& c, const Rational& alpha, int m = 0) { return AsymptoticSeries::monomial(c, alpha, m); }

// Random series on the 1/2 lattice with C-polynomial coefficients.
class SeriesGen {
 public:
  explicit SeriesGen(unsigned seed) : rng_(seed) {}

  AsymptoticSeries next() {
    const Rational trunc(static_cast<long>(pick(4, 8)), 2);
    AsymptoticSeries s = AsymptoticSeries::zero(trunc);
    const int n = pick(1, 5);
    for (int i = 0; i < n; ++i) {
      const Rational alpha(static_cast<long>(pick(-1, 7)), 2);
      std::vector<Rational> c;
      for (int d = pick(0, 2); d >= 0; --d) c.emplace_back(pick(-9, 9), pick(1, 6));
      s.add_term({alpha, pick(0, 2)}, CoeffPoly(c));
    }
    return s;
  }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::mt19937 rng_;
};

// Equal up to the smaller truncation order.
::testing::AssertionResult same_upto_truncation(const AsymptoticSeries& a, const AsymptoticSeries& b) {
  const Rational t = std::min(a.truncation_order(), b.truncation_order());
  if (auto d = first_difference(a, b, t))
    return ::testing::AssertionFailure() << "differ at ln^" << d->ln_power << "/k^" << to_string(d->alpha) << ": "
                                         << to_text(a) << "  vs  " << to_text(b);
  return ::testing::AssertionSuccess();
}

}  // namespace

TEST(CoeffPoly, Arithmetic) {
  const CoeffPoly p = C * C * Rational(3) + C - CoeffPoly(Rational(1, 2));
  EXPECT_EQ(p.degree(), 2);
  EXPECT_EQ(p.constant(), Rational(-1, 2));
  EXPECT_EQ(p.derivative(), C * Rational(6) + CoeffPoly(1));
  EXPECT_TRUE((p - p).is_zero());
  WorkingPrecision wp(30);
  EXPECT_EQ(p.evaluate(Real(2)), Real(Rational(27, 2)));
  EXPECT_EQ(CoeffPoly(C * C).compose(C + CoeffPoly(1)), C * C + C * Rational(2) + CoeffPoly(1));
}

TEST(Series, ProductExamples) {
  const Rational one(1);
  EXPECT_EQ(mono(one, 1) * mono(one, 1, 1), mono(one, 2, 1));
  const AsymptoticSeries a = mono(one, 1) - mono(one, 2, 1);
  const AsymptoticSeries want = mono(one, 2) - mono(Rational(2), 3, 1) + mono(one, 4, 2);
  EXPECT_EQ(a * a, want);
}

TEST(Series, TruncationIsNeverExceeded) {
  SeriesGen gen(7);
  for (int i = 0; i < 200; ++i) {
    const auto a = gen.next(), b = gen.next();
    for (const auto& s : {a + b, a * b, shift_k(a)}) {
      for (const auto& [k, c] : s.terms()) ASSERT_LE(k.alpha, s.truncation_order());
    }
  }
}

TEST(Series, ProductTruncationFollowsValuations) {
  AsymptoticSeries a = AsymptoticSeries::zero(3) + mono(Rational(1), 1);
  AsymptoticSeries b = AsymptoticSeries::zero(2) + mono(Rational(1), Rational(1, 2));
  // min(1 + 2, 1/2 + 3) = 3.
  EXPECT_EQ((a * b).truncation_order(), Rational(3));
}

// Property: ring laws up to truncation (>= 500 random cases each).
TEST(Property, RingLaws) {
  SeriesGen gen(20240601);
  for (int i = 0; i < 600; ++i) {
    const auto a = gen.next(), b = gen.next(), d = gen.next();
    ASSERT_EQ((a + b) + d, a + (b + d)) << i;
    ASSERT_EQ(a + b, b + a) << i;
    ASSERT_EQ(a * b, b * a) << i;
    ASSERT_TRUE(same_upto_truncation((a * b) * d, a * (b * d))) << i;
    ASSERT_TRUE(same_upto_truncation(a * (b + d), a * b + a * d)) << i;
  }
}

// Property: shift(A B) = shift(A) shift(B) up to truncation.
TEST(Property, ShiftIsAHomomorphism) {
  SeriesGen gen(99);
  for (int i = 0; i < 600; ++i) {
    const auto a = gen.next(), b = gen.next();
    ASSERT_TRUE(same_upto_truncation(shift_k(a * b), shift_k(a) * shift_k(b))) << i;
    ASSERT_TRUE(same_upto_truncation(shift_k(a + b), shift_k(a) + shift_k(b))) << i;
  }
}

TEST(Shift, InverseK) {
  const auto s = shift_k(AsymptoticSeries::zero(5) + mono(Rational(1), 1));
  for (long j = 1; j <= 5; ++j) EXPECT_EQ(s.coeff(j), CoeffPoly(Rational(j % 2 ? 1 : -1))) << j;
  EXPECT_EQ(s.size(), 5u);
}

TEST(Shift, LogIsMercator) {
  const auto s = shift_k(AsymptoticSeries::zero(4) + mono(Rational(1), 0, 1));
  EXPECT_EQ(s.coeff(0, 1), CoeffPoly(1));
  for (long j = 1; j <= 4; ++j) EXPECT_EQ(s.coeff(j), CoeffPoly(Rational(j % 2 ? 1 : -1, j))) << j;
}

// Oracle: ln(k+1)/(k+1)^(1/2) evaluated directly at k = 10^6.
TEST(Shift, LogOverSqrtAgainstDirectEvaluation) {
  const Rational half(1, 2);
  const auto s = shift_k(AsymptoticSeries::zero(Rational(5, 2)) + mono(Rational(1), half, 1));
  EXPECT_EQ(s.coeff(Rational(3, 2), 1), CoeffPoly(Rational(-1, 2)));
  EXPECT_EQ(s.coeff(Rational(3, 2), 0), CoeffPoly(1));
  WorkingPrecision wp(60);
  const Real k(1000000);
  const Real direct = log(k + Real(1)) / sqrt(k + Real(1));
  const Real approx = evaluate(s, k, Real(0)).value;
  // Remainder is O(ln k / k^(7/2)) = O(1e-20).
  EXPECT_LT(abs(direct - approx), Real("1e-20"));
}

// Property: S(k+1) - shift(S)(k) decays at the first omitted order.
TEST(Property, ShiftNumericConsistency) {
  struct Case {
    AsymptoticSeries s;
    Rational omitted;  // smallest alpha dropped by shift_k at the truncation
  };
  const Rational one(1);
  std::vector<Case> cases;
  {
    AsymptoticSeries s = AsymptoticSeries::zero(3) + mono(one, Rational(1, 2)) + mono(one, 1, 1) + mono(Rational(3), Rational(3, 2), 2);
    cases.push_back({s, Rational(7, 2)});
  }
  {
    AsymptoticSeries s = AsymptoticSeries::zero(4) + mono(Rational(2), 1) + mono(Rational(-5), 2, 1);
    cases.push_back({s, 5});
  }
  WorkingPrecision wp(80);
  const Real Cv(Rational(3, 7));
  for (const auto& c : cases) {
    const auto sh = shift_k(c.s);
    std::vector<double> res;
    for (long kk : {1000L, 10000L}) {
      const Real k(kk);
      const Real direct = evaluate(c.s.head(c.s.truncation_order()), k + Real(1), Cv).value;
      const Real via = evaluate(sh, k, Cv).value;
      res.push_back(abs(direct - via).to_double());
    }
    const double slope = std::log10(res[0] / res[1]);
    EXPECT_NEAR(slope, c.omitted.get_d(), 0.35) << to_text(c.s);
  }
}

TEST(Difference, KnownThroughOneMoreOrder) {
  const auto s = AsymptoticSeries::zero(2) + mono(Rational(1), 1);
  const auto d = difference(s);
  EXPECT_EQ(d.truncation_order(), Rational(3));
  EXPECT_EQ(d.coeff(2), CoeffPoly(-1));
  EXPECT_EQ(d.coeff(3), CoeffPoly(1));
}

TEST(Pow, SquareRootOfLeadingMonomial) {
  const auto s = AsymptoticSeries::zero(6) + mono(Rational(4), 2);
  const auto r = pow(s, Rational(1, 2));
  EXPECT_EQ(r.coeff(1), CoeffPoly(2));
  EXPECT_EQ(r.size(), 1u);
  EXPECT_EQ(r.truncation_order(), Rational(5));
}

TEST(Pow, IrrationalLeadRejected) {
  const auto s = AsymptoticSeries::zero(4) + mono(Rational(2), 2);
  EXPECT_THROW(pow(s, Rational(1, 2)), SeriesError);
}

TEST(Pow, MatchesRepeatedProduct) {
  SeriesGen gen(3);
  for (int i = 0; i < 50; ++i) {
    AsymptoticSeries s = gen.next();
    // Generated exponents are >= -1/2, so 4k leads.
    s.set_term({-1, 0}, CoeffPoly(Rational(4)));
    ASSERT_TRUE(same_upto_truncation(pow(s, 3), s * s * s)) << i;
    ASSERT_TRUE(same_upto_truncation(pow(pow(s, Rational(1, 2)), 2), s)) << i;
  }
}

Rational ipow(const Rational& b, long n) {
  Rational r(1);
  while (n-- > 0) r *= b;
  return r;
}

// (1+z)^q at z = 1/y with y = q k: binomial coefficients in 1/(q k).
TEST(ComposeAnalytic, BinomialAtInverseY) {
  const Rational q(3, 2);
  const auto z = AsymptoticSeries::zero(4) + mono(CoeffPoly(Rational(Rational(1) / q)), 1);
  const auto out = compose_analytic([&](unsigned long n) { return binomial(q, n); }, z);
  for (long j = 0; j <= 4; ++j)
    EXPECT_EQ(out.coeff(j), CoeffPoly(Rational(binomial(q, static_cast<unsigned long>(j)) / ipow(q, j)))) << j;
}

TEST(ComposeAnalytic, RejectsNonDecayingInner) {
  const auto z = AsymptoticSeries::zero(2) + mono(Rational(1), 0);
  EXPECT_THROW(compose_analytic([](unsigned long) { return Rational(1); }, z), SeriesError);
}

TEST(TranslateLog, ShiftsLogarithm) {
  const auto s = AsymptoticSeries::zero(3) + mono(Rational(1), 2, 2);
  const auto t = translate_log(s, C);
  EXPECT_EQ(t.coeff(2, 2), CoeffPoly(1));
  EXPECT_EQ(t.coeff(2, 1), C * Rational(2));
  EXPECT_EQ(t.coeff(2, 0), C * C);
}

TEST(Json, RoundTrip) {
  SeriesGen gen(11);
  for (int i = 0; i < 100; ++i) {
    const auto s = gen.next();
    EXPECT_EQ(series_from_json(to_json(s), s.truncation_order()), s) << to_text(s) << " vs " << to_text(series_from_json(to_json(s), s.truncation_order()));
  }
}

TEST(Text, RendersDominantFirst) {
  const auto s = AsymptoticSeries::zero(3) + mono(Rational(4), 2) - mono(Rational(12), 3, 1) - mono(C * Rational(8), 3);
  EXPECT_EQ(to_text(s), "4/k^2 - 12*ln(k)/k^3 - 8*C/k^3 + O(k^-(3+))");
}

TEST(Evaluate, ValueAndDerivative) {
  const auto s = AsymptoticSeries::zero(3) + mono(C * C, 1) + mono(Rational(2), 2, 1);
  WorkingPrecision wp(40);
  const Real k(100), Cv(3);
  const auto v = evaluate(s, k, Cv);
  const Real want = Real(9) / k + Real(2) * log(k) / (k * k);
  EXPECT_GE(agreeing_digits(v.value, want), 38);
  EXPECT_GE(agreeing_digits(v.d_dC, Real(6) / k), 38);
}
