#include <iterasym/maps.hpp>
#include <iterasym/orbit.hpp>

#include <gtest/gtest.h>

using namespace iterasym;

TEST(Iterate, SmallExactExamples) {
  const PrecisionPolicy pol{30, 0};
  WorkingPrecision wp(60);
  EXPECT_EQ(*iterate(parse_map("logistic(p=1/2, x0=1/2)"), pol, 2).x, Real(Rational(7, 128)));
  EXPECT_EQ(*iterate(parse_map("sylvester"), pol, 3).x, Real(43));
  EXPECT_EQ(*iterate(parse_map("power-sum(q=2)"), pol, 2).x, Real(Rational(5, 2)));
}

TEST(Iterate, StreamsEveryRecord) {
  std::vector<long> ks;
  iterate(parse_map("cubic-map"), {20, 0}, 10, [&](const OrbitRecord& r) { ks.push_back(r.k); });
  ASSERT_EQ(ks.size(), 11u);
  for (long k = 0; k <= 10; ++k) EXPECT_EQ(ks[static_cast<size_t>(k)], k);
}

TEST(Iterate, MatchesExactOrbit) {
  auto m = parse_map("logistic(p=2/3, x0=1/3)");
  const auto exact = exact_orbit(m, 12);
  const PrecisionPolicy pol{60, 0};
  WorkingPrecision wp(80);
  iterate(m, pol, 12, [&](const OrbitRecord& r) {
    EXPECT_GE(agreeing_digits(*r.x, Real(exact[static_cast<size_t>(r.k)])), 60) << r.k;
  });
}

TEST(Iterate, GuardBelowRequirementIsReported) {
  const PrecisionPolicy pol{15, 3};
  EXPECT_THROW(iterate(parse_map("sqrt-map"), pol, 100000), PrecisionExhausted);
}

TEST(PartialProduct, FirstFactors) {
  auto m = parse_map("logistic(p=1/2, x0=1/2)");
  const PrecisionPolicy pol{30, 0};
  WorkingPrecision wp(60);
  EXPECT_EQ(partial_product(m, pol, 0), Real(Rational(1, 2)));
  // x0 (1 - x0) = 1/4 at n = 1.
  EXPECT_EQ(partial_product(m, pol, 1), Real(Rational(1, 4)));
}

// Oracle: P_n = x_n / p^n, from the exact rational orbit.
TEST(PartialProduct, EqualsScaledOrbit) {
  for (const char* s : {"logistic(p=1/3, x0=1/2)", "logistic-plus(p=1/4, x0=3/2)"}) {
    auto m = parse_map(s);
    const auto x = exact_orbit(m, 10);
    const PrecisionPolicy pol{40, 0};
    for (long n = 0; n <= 10; ++n) {
      Rational want = x[static_cast<size_t>(n)] / detail::rational_pow_int(m.spec().p, n);
      WorkingPrecision wp(80);
      EXPECT_GE(agreeing_digits(partial_product(m, pol, n), Real(want)), 40) << s << " n=" << n;
    }
  }
}

TEST(PartialProduct, MonotoneInN) {
  const PrecisionPolicy pol{30, 0};
  WorkingPrecision wp(60);
  auto lg = parse_map("logistic(p=1/2, x0=1/2)");
  auto lp = parse_map("logistic-plus(p=1/5, x0=2)");
  Real prev_lg = partial_product(lg, pol, 0), prev_lp = partial_product(lp, pol, 0);
  for (long n = 1; n <= 60; ++n) {
    Real a = partial_product(lg, pol, n), b = partial_product(lp, pol, n);
    EXPECT_LT(a, prev_lg) << n;
    EXPECT_GT(b, prev_lp) << n;
    prev_lg = a;
    prev_lp = b;
  }
}

TEST(PartialProduct, ConvergesToTableEntries) {
  const PrecisionPolicy pol{20, 0};
  WorkingPrecision wp(50);
  EXPECT_TRUE(matches_printed(partial_product(parse_map("logistic(p=1/2, x0=1/2)"), pol, 80), "0.196453426377889"));
  EXPECT_TRUE(matches_printed(partial_product(parse_map("logistic-plus(p=1/5, x0=2)"), pol, 200), "24.539007835941751"));
}

// Property: recomputing with doubled guard digits reproduces the value to
// the target digits, for depths up to 2000.
TEST(Property, GuardDoublingStability) {
  for (const char* s : {"logistic(p=1/2, x0=1/2)", "logistic(p=99/100, x0=1/2)", "logistic-plus(p=4/5, x0=1/8)"}) {
    auto m = parse_map(s);
    for (long n : {10L, 200L, 2000L}) {
      const PrecisionPolicy pol{25, 0};
      const Real a = partial_product(m, pol, n);
      const Real b = partial_product(m, pol.with_doubled_guard(n), n);
      WorkingPrecision wp(80);
      EXPECT_GE(agreeing_digits(a, b), 25) << s << " n=" << n;
    }
  }
}

TEST(TailBound, LogisticHalfWithinFourX) {
  auto m = parse_map("logistic(p=1/2, x0=1/2)");
  const PrecisionPolicy pol{30, 0};
  for (long n : {5L, 20L, 60L}) {
    const Real B = product_tail_bound(m, pol, n);
    const Real xn = *iterate(m, pol, n).x;
    WorkingPrecision wp(60);
    EXPECT_LE(B, Real(4) * xn * Real(Rational(1000001, 1000000))) << n;
  }
}

// Oracle: |ln(P_{4n} / P_n)| at doubled precision stays below B_n, and
// B_{2n} <= c B_n^2 with one c across n in {20, 40, 80}.
TEST(TailBound, RigorousAndSquaresOnDoubling) {
  for (const char* s : {"logistic(p=1/2, x0=1/2)", "logistic-plus(p=1/3, x0=1)"}) {
    auto m = parse_map(s);
    const PrecisionPolicy pol{40, 0};
    const PrecisionPolicy hi{80, 0};
    std::vector<double> ratios;
    for (long n : {20L, 40L, 80L}) {
      const Real Bn = product_tail_bound(m, pol, n);
      const Real B2n = product_tail_bound(m, pol, 2 * n);
      const Real Pn = partial_product(m, hi, n);
      const Real P4n = partial_product(m, hi, 4 * n);
      WorkingPrecision wp(120);
      EXPECT_LT(abs(log(P4n / Pn)), Bn) << s << " n=" << n;
      ratios.push_back((B2n / (Bn * Bn)).to_double());
    }
    for (double r : ratios) EXPECT_LT(r, 10.0) << s;
    EXPECT_NEAR(ratios.front() / ratios.back(), 1.0, 0.1) << s;
  }
}

TEST(TailBound, EnvelopeHypothesis) {
  auto m = parse_map("logistic(p=1/2, x0=9/10)");
  EXPECT_THROW(product_tail_bound(m, {20, 0}, 0), ClassificationError);
}

TEST(DoublingLogOrbit, FirstStepAndLimits) {
  const PrecisionPolicy pol{30, 0};
  const auto L = doubling_log_orbit(parse_map("logistic-plus(p=1)"), pol, 40);
  const auto Ls = doubling_log_orbit(parse_map("sylvester"), pol, 40);
  WorkingPrecision wp(60);
  EXPECT_GE(agreeing_digits(L[1], log(Real(2))), 30);
  EXPECT_TRUE(matches_printed(exp(ldexp(L[40], -40)), "1.597910218031873"));
  EXPECT_TRUE(matches_printed(exp(ldexp(Ls[40], -41)), "1.264084735305301"));
}

// Property: the log-step corrections decay doubly exponentially.  They are
// evaluated from their closed forms, since L_{k+1} - 2 L_k cancels to zero
// at any fixed precision once the correction drops below it.
TEST(Property, DoublingCorrectionsSquare) {
  const PrecisionPolicy pol{60, 0};
  for (const char* s : {"logistic-plus(p=1)", "sylvester", "pythagorean"}) {
    auto m = parse_map(s);
    const auto L = doubling_log_orbit(m, pol, 14);
    WorkingPrecision wp(100);
    const auto diffs = doubling_corrections(m, L);
    std::vector<Real> corr;
    for (const auto& l : L) {
      const Real e = exp(-l);
      switch (m.family()) {
        case Family::logistic_plus: corr.push_back(log1p(e)); break;
        case Family::sylvester: corr.push_back(log1p(e * e - e)); break;
        default: corr.push_back(log1p(e * e)); break;
      }
    }
    for (size_t k = 0; k < 4; ++k) EXPECT_GE(agreeing_digits(diffs[k], corr[k]), 50) << s << " k=" << k;
    // Pythagorean steps subtract ln 2, which multiplies the next correction by 4.
    const Real factor(m.family() == Family::pythagorean ? 8 : 2);
    for (size_t k = 5; k + 1 < corr.size(); ++k)
      EXPECT_LT(abs(corr[k + 1]), abs(corr[k]) * abs(corr[k]) * factor) << s << " k=" << k;
  }
}

// Property: exp(L_k) at 100 digits matches the exact orbit to >= 90 digits.
TEST(Property, LogOrbitMatchesExactOrbit) {
  for (const char* s : {"logistic-plus(p=1)", "sylvester", "pythagorean"}) {
    auto m = parse_map(s);
    const auto exact = exact_orbit(m, 12);
    const auto L = doubling_log_orbit(m, {100, 0}, 12);
    WorkingPrecision wp(110);
    for (size_t k = 0; k <= 12; ++k) EXPECT_GE(agreeing_digits(exp(L[k]), Real(exact[k])), 90) << s << " k=" << k;
  }
}

TEST(DoublingLogOrbit, RequiresDoublingMap) {
  EXPECT_THROW(doubling_log_orbit(parse_map("sqrt-map"), {20, 0}, 5), ClassificationError);
  EXPECT_THROW(partial_product(parse_map("sqrt-map"), {20, 0}, 5), ClassificationError);
}
