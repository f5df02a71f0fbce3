#include <cmath>

#include <gtest/gtest.h>

#include "oulab/geometry.hpp"

using namespace oulab;

TEST(Cutoff, ShapeAndSlope) {
  EXPECT_EQ(cutoff(1.0, 2.0), 1.0);
  EXPECT_EQ(cutoff(3.0, 2.0), 0.0);
  EXPECT_NEAR(cutoff(2.5, 2.0), 0.5, 1e-15);
  double worst = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    const double s = 2.0 + k / 1000.0;
    worst = std::max(worst, std::abs(cutoff_slope(s, 2.0)));
    const double fd = (cutoff(s + 1e-6, 2.0) - cutoff(s - 1e-6, 2.0)) / 2e-6;
    EXPECT_NEAR(cutoff_slope(s, 2.0), fd, 1e-6);
  }
  EXPECT_NEAR(worst, 15.0 / 8.0, 1e-6);
}

TEST(Identity, SecondOrderOnRadialField) {
  const auto ord = identity_refinement_order([](double x, double y) { return std::exp(-(x * x + y * y)); }, 5.0, 0.05,
                                             0.1);
  EXPECT_GE(ord.order, 1.8);
  EXPECT_LT(ord.fine_error, ord.coarse_error);
}

TEST(Identity, ConstantFieldIsDegenerate) {
  const auto f = make_field(3.0, 0.1, [](double, double) { return 0.5; });
  EXPECT_THROW(sz_identity_check(f), DegenerateFieldError);
}

TEST(Identity, ErrorsAreNanAtCriticalNodes) {
  const auto f = make_field(3.0, 0.1, [](double x, double y) { return x * x + y * y; });
  const auto e = sz_identity_errors(f, 1e-3);
  const std::size_t nc = f.n - 2 * field_detail::core_lo(f);
  ASSERT_EQ(e.size(), nc * nc);
  EXPECT_TRUE(std::isnan(e[(nc / 2) * nc + nc / 2]));
  EXPECT_FALSE(std::isnan(e[0]));
}

TEST(Poincare, InequalityOnSteadyState) {
  const auto p = potential::double_well(4.0);
  const auto u0 = make_field(5.0, 0.1, [](double x, double y) { return std::tanh(x + 0.3 * std::sin(y)); });
  const auto steady = relax_newton(p, u0);
  ASSERT_TRUE(steady.converged);
  const auto& f = steady.field;
  const auto r2 = poincare_inequality_check(p, f, 2.0);
  const auto r3 = poincare_inequality_check(p, f, 3.0);
  EXPECT_TRUE(r2.inequality_satisfied);
  EXPECT_TRUE(r3.inequality_satisfied);
  EXPECT_LT(r3.rhs_integral, r2.rhs_integral);
  EXPECT_DOUBLE_EQ(r2.rhs_integral_next, r3.rhs_integral);
  EXPECT_TRUE(std::isnan(r3.rhs_integral_next));
  EXPECT_TRUE(to_json(r3)["rhs_integral_next"].is_null());
}

TEST(Poincare, CutoffMustFitCore) {
  const auto p = potential::double_well(4.0);
  const auto f = make_field(5.0, 0.1, [](double x, double) { return std::tanh(x); });
  EXPECT_THROW(poincare_inequality_check(p, f, 3.5), InvalidArgument);
  EXPECT_THROW(poincare_inequality_check(p, f, 0.0), InvalidArgument);
}
