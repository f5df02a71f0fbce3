#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oulab/potential.hpp"

using namespace oulab;

TEST(Potential, DoubleWellValues) {
  const auto p = potential::double_well(4.0);
  EXPECT_DOUBLE_EQ(p.F(0.0), 1.0);
  EXPECT_DOUBLE_EQ(p.F(1.0), 0.0);
  EXPECT_DOUBLE_EQ(p.f(0.5), 4.0 * (0.5 - 0.125));
  EXPECT_DOUBLE_EQ(p.fprime(0.0), 4.0);
  EXPECT_DOUBLE_EQ(p.c(), 1.0);
  EXPECT_TRUE(p.hypotheses().all());
}

TEST(Potential, CustomChecksDerivatives) {
  auto F = [](double t) { return (1 - t * t) * (1 - t * t) / 4; };
  auto f = [](double t) { return t - t * t * t; };
  auto bad = [](double t) { return 2 * (t - t * t * t); };
  auto fp = [](double t) { return 1 - 3 * t * t; };
  EXPECT_NO_THROW(potential::custom(F, f, fp, 1.0));
  EXPECT_THROW(potential::custom(F, bad, fp, 1.0), ModelInconsistencyError);
}

TEST(Potential, PolynomialMatchesDoubleWell) {
  // A (1 - t^2)^2 / 4 with A = 2
  const auto p = potential::polynomial({0.5, 0.0, -1.0, 0.0, 0.5}, 1.0);
  const auto q = potential::double_well(2.0);
  for (double t : {-1.3, -0.4, 0.0, 0.2, 0.9})
    EXPECT_NEAR(p.f(t), q.f(t), 1e-13);
  EXPECT_TRUE(p.hypotheses().all());
}

TEST(Potential, InvertedWellFailsHypotheses) {
  const auto p = potential::inverted_double_well(1.0);
  EXPECT_FALSE(p.hypotheses().all());
}

TEST(Potential, RejectsBadAmplitude) {
  EXPECT_THROW(potential::double_well(0.0), InvalidArgument);
  EXPECT_THROW(potential::double_well(-1.0), InvalidArgument);
}

TEST(Existence, RemarkClosedForms) {
  const auto r1 = existence_screen(potential::double_well(1.0), -1.0, 1.0);
  EXPECT_NEAR(r1.lhs_remark, std::sqrt(2.0) / 3.0, 1e-8);
  EXPECT_NEAR(r1.rhs_remark, std::sqrt(std::numbers::pi / 2.0) / 4.0, 1e-10);
  EXPECT_FALSE(r1.remark_satisfied);
  EXPECT_FALSE(r1.blocking_interval.has_value());
  EXPECT_EQ(r1.verdict, ExistenceVerdict::inconclusive);

  const auto r4 = existence_screen(potential::double_well(4.0), -1.0, 1.0);
  EXPECT_TRUE(r4.remark_satisfied);
  EXPECT_EQ(r4.verdict, ExistenceVerdict::sufficient_condition_met);
}

TEST(Existence, ThresholdBrackets) {
  const double a = remark_threshold();
  EXPECT_NEAR(a, 64.0 / (9.0 * std::numbers::pi), 1e-15);
  EXPECT_FALSE(existence_screen(potential::double_well(0.99 * a), -1.0, 1.0).remark_satisfied);
  EXPECT_TRUE(existence_screen(potential::double_well(1.01 * a), -1.0, 1.0).remark_satisfied);
}

TEST(Existence, SignObstruction) {
  const auto r = existence_screen(potential::inverted_double_well(1.0), -1.0, 1.0);
  EXPECT_EQ(r.verdict, ExistenceVerdict::nonexistence_proved);
  ASSERT_TRUE(r.blocking_interval.has_value());
  EXPECT_LT(r.blocking_interval->lo, r.blocking_interval->hi);
}

TEST(Existence, RejectsNonEquilibriumLimits) {
  EXPECT_THROW(existence_screen(potential::double_well(1.0), -0.5, 1.0), InvalidArgument);
  EXPECT_THROW(existence_screen(potential::double_well(1.0), 1.0, -1.0), InvalidArgument);
}
