#include <cmath>

#include <gtest/gtest.h>

#include "oulab/heteroclinic.hpp"

using namespace oulab;

namespace {

const ShootResult& shoot_a4() {
  static const ShootResult r = shoot(potential::double_well(4.0), 8.0);
  return r;
}

}  // namespace

TEST(Shoot, ConvergesAtA4) {
  const auto& r = shoot_a4();
  ASSERT_EQ(r.status, ShootStatus::converged);
  ASSERT_TRUE(r.profile.has_value());
  EXPECT_TRUE(r.profile->monotone);
  EXPECT_LE(r.profile->residual_sup, 1e-8);
  EXPECT_LE(std::abs(r.profile->values.back() - 1.0), 1e-5);
  EXPECT_EQ(r.profile->values.front(), 0.0);
  EXPECT_LT(r.bracket.lo, r.bracket.hi);
}

TEST(Shoot, ClassifierTraceBracketsSlope) {
  const auto& r = shoot_a4();
  bool under = false, over = false;
  for (const auto& t : r.classifier_trace) {
    if (t.outcome == TrialOutcome::undershoot) {
      under = true;
      EXPECT_LE(t.slope, r.shooting_slope * (1 + 1e-12));
    } else {
      over = true;
      EXPECT_GE(t.slope, r.shooting_slope * (1 - 1e-12));
    }
  }
  EXPECT_TRUE(under && over);
}

TEST(Collocation, AgreesWithShooting) {
  const auto p = potential::double_well(4.0);
  const auto& r = shoot_a4();
  const auto col = collocate(p, *r.profile, 8.0);
  EXPECT_LE(col.profile.residual_sup, 1e-8);
  double d = 0.0;
  for (std::size_t i = 0; i < r.profile->size(); ++i)
    d = std::max(d, std::abs(col.profile.values[i] - r.profile->values[i]));
  EXPECT_LE(d, 1e-5);
  const auto [gap, fval] = limits_check(col.profile, p);
  EXPECT_LE(gap, 1e-5);
  EXPECT_LE(fval, 1e-4);
}

TEST(Shoot, SignFlippedWellHasNoConnection) {
  ShootOptions o;
  o.log_trajectories = true;
  const auto r = shoot(potential::inverted_double_well(1.0), 8.0, o);
  EXPECT_EQ(r.status, ShootStatus::nonexistence);
  EXPECT_FALSE(r.profile.has_value());
  ASSERT_FALSE(r.trajectories.empty());
  for (const auto& tr : r.trajectories) EXPECT_GE(growth_ratio(tr, 1.0), 1.0 - 1e-6);
}

TEST(Shoot, RejectsShortInterval) {
  EXPECT_THROW(shoot(potential::double_well(4.0), 3.0), InvalidArgument);
}
