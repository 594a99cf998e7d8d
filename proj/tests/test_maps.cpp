#include <iterasym/maps.hpp>
#include <iterasym/orbit.hpp>

#include <gtest/gtest.h>

using namespace iterasym;

namespace {

std::string spec_error(const std::string& text) {
  try {
    parse_map(text);
  } catch (const SpecError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(MakeMap, ClassificationExamples) {
  auto m = parse_map("logistic(p=1/2, x0=1/2)");
  EXPECT_EQ(m.kind(), DecayKind::geometric_decay);
  EXPECT_EQ(m.classification().rate, Rational(1, 2));

  auto ps = parse_map("power-sum(q=3/2, x0=1)");
  EXPECT_EQ(ps.kind(), DecayKind::algebraic_growth);
  EXPECT_EQ(ps.classification().rate, Rational(3, 2));

  EXPECT_EQ(parse_map("logistic(p=1, x0=1/2)").kind(), DecayKind::algebraic_decay);
  EXPECT_EQ(parse_map("logistic-plus(p=1)").kind(), DecayKind::doubling_growth);
  EXPECT_EQ(parse_map("sylvester").kind(), DecayKind::doubling_growth);
  EXPECT_EQ(parse_map("pythagorean").kind(), DecayKind::doubling_growth);
  for (const char* s : {"sqrt-map", "cubic-map", "half-cubic", "cos-map", "gauss-exp", "reciprocal(s=3/2)"})
    EXPECT_EQ(parse_map(s).kind(), DecayKind::algebraic_decay) << s;
}

TEST(MakeMap, DomainErrorsNameTheInequality) {
  EXPECT_EQ(spec_error("logistic-plus(p=1/2, x0=3/2)"), "x0 must satisfy 0<x0<(1-p)/p=1");
  EXPECT_EQ(spec_error("logistic(p=2, x0=1/2)"), "p must satisfy 0<p≤1");
  EXPECT_EQ(spec_error("logistic(p=1/2, x0=1)"), "x0 must satisfy 0<x0<1");
  EXPECT_EQ(spec_error("power-sum(q=1)"), "q must satisfy q>1");
  EXPECT_EQ(spec_error("cos-map(x0=3/2)"), "x0 must satisfy 0<x0<1");
  EXPECT_NE(spec_error("power-sum(q=2, x0=2)"), "");
  EXPECT_NE(spec_error("sylvester(y0=5)"), "");
  EXPECT_NE(spec_error("logistic(x0=1/2)"), "");
  EXPECT_NE(spec_error("nonsense(p=1/2)"), "");
}

TEST(MakeMap, DefaultsAndAutoMid) {
  EXPECT_EQ(parse_map("logistic-plus(p=1/5)").x0(), StartValue::rational(2));
  EXPECT_EQ(parse_map("logistic-plus(p=3/4, x0=auto-mid)").x0(), StartValue::rational(Rational(1, 6)));
  EXPECT_EQ(parse_map("sqrt-map").x0(), StartValue::rational(Rational(1, 2)));
  EXPECT_EQ(parse_map("power-sum(q=2)").x0(), StartValue::rational(1));
}

TEST(StartValue, SurdForms) {
  EXPECT_EQ(parse_start_value("sqrt(1/3)"), parse_start_value("1/sqrt(3)"));
  EXPECT_EQ(parse_start_value("sqrt(3)/3"), parse_start_value("sqrt(1/3)"));
  EXPECT_EQ(parse_start_value("sqrt(4/9)"), StartValue::rational(Rational(2, 3)));
  EXPECT_TRUE(parse_start_value("sqrt(1/3)").surd);
}

TEST(MapSpecText, RoundTrips) {
  for (const char* s : {"logistic(p=2/5, x0=1/2)", "logistic-plus(p=1/5)", "sqrt-map(x0=4/9)", "cubic-map(x0=sqrt(1/3))",
                        "power-sum(q=3/2)", "reciprocal(s=3)", "sylvester"}) {
    const MapSpec a = parse_map_spec(s);
    EXPECT_EQ(parse_map_spec(to_string(a)), a) << s;
  }
}

TEST(Step, Examples) {
  auto lg = parse_map("logistic(p=1/2, x0=1/2)");
  EXPECT_EQ(lg.step(Rational(1, 2)), Rational(1, 8));
  auto sy = parse_map("sylvester");
  EXPECT_EQ(sy.step(Rational(2)), Rational(3));
  EXPECT_EQ(sy.step(Rational(3)), Rational(7));
  auto ps = parse_map("power-sum(q=2)");
  EXPECT_EQ(ps.step(Rational(1)), Rational(2));
}

TEST(Step, OutsideDomainIsABug) {
  auto lg = parse_map("logistic(p=1/2, x0=1/2)");
  EXPECT_THROW(lg.step(Rational(3, 2)), DomainViolation);
  auto sq = parse_map("sqrt-map");
  EXPECT_THROW(sq.step(Rational(1, 4)), DomainViolation);  // no exact step
}

TEST(Step, RealMatchesExactForRationalFamilies) {
  WorkingPrecision wp(60);
  for (const char* s : {"logistic(p=2/3, x0=1/3)", "logistic-plus(p=1/4, x0=1)", "cubic-map(x0=1/3)", "half-cubic(x0=2/3)",
                        "power-sum(q=3)", "reciprocal(s=2)", "pythagorean"}) {
    auto m = parse_map(s);
    const Rational x = *m.x0().exact();
    EXPECT_GE(agreeing_digits(m.step(Real(x)), Real(m.step(x))), 58) << s;
  }
}

TEST(FixedPoint, Examples) {
  EXPECT_EQ(fixed_point(parse_map("logistic-plus(p=1/2, x0=1/2)")), Rational(1));
  EXPECT_EQ(fixed_point(parse_map("logistic-plus(p=1/5, x0=2)")), Rational(4));
  EXPECT_FALSE(fixed_point(parse_map("power-sum(q=2)")).has_value());
  EXPECT_EQ(fixed_point(parse_map("sqrt-map")), Rational(0));
}

TEST(Epsilon, EnvelopeRatioFromMargin) {
  auto m = parse_map("logistic-plus(p=4/5, x0=1/8)");
  EXPECT_EQ(m.epsilon(), Rational(1, 10));
  EXPECT_EQ(envelope_ratio(m), Rational(9, 10));
}

// Property: 0 < x_k < p^k x0 for k = 1..200 across a grid of p and x0.
TEST(Property, LogisticGeometricEnvelope) {
  WorkingPrecision wp(60);
  int checked = 0;
  for (const char* p : {"1/10", "1/5", "1/3", "1/2", "2/3", "4/5", "9/10", "99/100"}) {
    for (const char* x0 : {"1/100", "1/2", "9/10"}) {
      auto m = parse_map(std::string("logistic(p=") + p + ", x0=" + x0 + ")");
      const Real pr(m.spec().p);
      Real x = m.x0().value();
      Real env = x;
      for (int k = 1; k <= 200; ++k) {
        x = m.step(x);
        env *= pr;
        ASSERT_GT(x.sign(), 0);
        ASSERT_LT(x, env) << p << " " << x0 << " k=" << k;
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, 8 * 3 * 200);
}

// Property: x_k strictly decreasing and x_k < (1-eps)^k x0.
TEST(Property, LogisticPlusEnvelope) {
  WorkingPrecision wp(60);
  for (const char* p : {"1/5", "1/3", "1/2", "3/4", "4/5"}) {
    for (const char* eps_text : {"1/100", "1/10"}) {
      const Rational pr = parse_rational(p), eps = parse_rational(eps_text);
      if (!(eps < 1 - pr)) continue;
      Rational x0 = (1 - pr - eps) / pr;
      x0.canonicalize();
      MapSpec spec;
      spec.family = Family::logistic_plus;
      spec.p = pr;
      spec.x0 = StartValue::rational(x0);
      RecurrenceMap m(spec);
      ASSERT_EQ(m.epsilon(), eps);
      const Real rho(1 - eps);
      Real x = m.x0().value(), env = x;
      for (int k = 1; k <= 200; ++k) {
        Real next = m.step(x);
        env *= rho;
        ASSERT_LT(next, x);
        // x_1 = p (1 + x0) x0 = (1 - eps) x0 exactly; strict from k = 2.
        if (k == 1)
          ASSERT_EQ(m.step(x0), Rational((1 - eps) * x0));
        else
          ASSERT_LT(next, env) << p << " eps=" << eps_text << " k=" << k;
        x = next;
      }
    }
  }
}

// Property: z_k = 1 + 2 x_k and y_k = 1 + x_k (exact) for k <= 12.
TEST(Property, DoublingFamilyLinkage) {
  const auto x = exact_orbit(parse_map("logistic-plus(p=1, x0=1)"), 12);
  const auto z = exact_orbit(parse_map("pythagorean"), 12);
  const auto y = exact_orbit(parse_map("sylvester"), 12);
  for (size_t k = 0; k <= 12; ++k) {
    EXPECT_EQ(z[k], 1 + 2 * x[k]) << k;
    EXPECT_EQ(y[k], 1 + x[k]) << k;
  }
  EXPECT_EQ(y[3], 43);
}

// Property: x_k increasing and |x_k^q - x_{k-1}^q - q| < 10 q^2 / x_{k-1}^q for k >= 10.
TEST(Property, PowerSumIncrements) {
  WorkingPrecision wp(50);
  for (const char* q : {"3/2", "2", "5/2", "3", "4"}) {
    auto m = parse_map(std::string("power-sum(q=") + q + ")");
    const Rational qr = m.spec().q;
    const Real qR(qr);
    Real x = m.x0().value();
    for (int k = 1; k <= 3000; ++k) {
      Real next = m.step(x);
      ASSERT_GT(next, x);
      if (k >= 10) {
        const Real prev_q = pow(x, qr);
        const Real inc = pow(next, qr) - prev_q;
        ASSERT_LT(abs(inc - qR), Real(10) * qR * qR / prev_q) << q << " k=" << k;
      }
      x = next;
    }
  }
}

TEST(Property, StepIsDeterministic) {
  WorkingPrecision wp(80);
  for (const char* s : {"cos-map(x0=1/2)", "gauss-exp(x0=1/3)", "sqrt-map(x0=4/9)", "reciprocal(s=3/2)", "power-sum(q=3/2)"}) {
    auto m = parse_map(s);
    const Real x = m.x0().value();
    EXPECT_TRUE(m.step(x).identical(m.step(x))) << s;
  }
}
