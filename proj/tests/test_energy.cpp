#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oulab/energy.hpp"
#include "oulab/random.hpp"

using namespace oulab;

namespace {

Profile1D tanh_profile(double T = 12.0, std::size_t n = 2048) {
  Profile1D m;
  m.c = 1.0;
  m.grid = uniform_grid(0.0, T, n);
  for (double t : m.grid) {
    m.values.push_back(std::tanh(t));
    m.derivative.push_back(1.0 - std::tanh(t) * std::tanh(t));
  }
  return m;
}

}  // namespace

TEST(Energy, ConstantProfiles) {
  const auto p = potential::double_well(4.0);
  Profile1D z;
  z.c = 1.0;
  z.grid = uniform_grid(0.0, 12.0, 64);
  z.values.assign(65, 0.0);
  z.derivative.assign(65, 0.0);
  const auto r = energy(p, z);
  EXPECT_NEAR(r.value, std::sqrt(std::numbers::pi / 2.0), 1e-10);
  EXPECT_NEAR(r.g0, r.value, 1e-12);
  EXPECT_FALSE(r.assen_satisfied);
}

TEST(Energy, TanhBeatsZeroAtA4) {
  const auto r = energy(potential::double_well(4.0), tanh_profile());
  EXPECT_TRUE(r.assen_satisfied);
  EXPECT_GT(r.dirichlet_part, 0.0);
}

TEST(Energy, RejectsFullLineProfile) {
  Profile1D q;
  q.grid = uniform_grid(-1.0, 1.0, 4);
  q.values.assign(5, 0.0);
  q.derivative.assign(5, 0.0);
  EXPECT_THROW(energy(potential::double_well(1.0), q), InvalidArgument);
}

TEST(Rearrangement, MonotoneInputIsFixed) {
  const auto m = tanh_profile();
  const auto s = ehrhard_rearrange(m);
  double e = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) e = std::max(e, std::abs(s.values[i] - m.values[i]));
  EXPECT_LE(e, 1e-9);
  EXPECT_TRUE(s.monotone);
}

TEST(Rearrangement, EquimeasurableAndDirichletDecreasing) {
  const auto p = potential::double_well(4.0);
  Rng rng(11);
  for (int k = 0; k < 10; ++k) {
    const auto u = random_profile(rng, 1.0, 12.0, 1024);
    const auto a = energy(p, u);
    const auto b = rearranged_energy(p, u);
    EXPECT_NEAR(a.potential_part, b.potential_part, 1e-6) << "profile " << k;
    EXPECT_LE(b.dirichlet_part, a.dirichlet_part + 1e-6) << "profile " << k;
  }
}

TEST(Rearrangement, OutputIsNondecreasing) {
  Rng rng(3);
  const auto u = random_profile(rng, 1.0, 12.0, 512);
  const auto s = ehrhard_rearrange(u);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_GE(s.values[i], s.values[i - 1] - 1e-12);
  EXPECT_GE(s.values.front(), 0.0);
  EXPECT_LE(s.values.back(), 1.0);
}

TEST(Minimize, SmallAmplitudeGivesConstant) {
  MinimizeOptions o;
  o.n = 512;
  const auto r = minimize(potential::double_well(0.1), o);
  EXPECT_FALSE(r.assen_satisfied);
  EXPECT_FALSE(r.nonconstant);
  for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1] + 1e-12);
}

TEST(Minimize, LargeAmplitudeBeatsZero) {
  MinimizeOptions o;
  o.n = 512;
  o.refine = false;
  const auto r = minimize(potential::double_well(8.0), o);
  EXPECT_TRUE(r.assen_satisfied);
  EXPECT_TRUE(r.nonconstant);
  ASSERT_TRUE(r.minimizer.has_value());
  EXPECT_TRUE(r.minimizer->monotone);
}

TEST(Sweep, CsvHeader) {
  std::ostringstream os;
  write_sweep_csv({{1.0, 0.3, 0.31, true, 0.4, 0.3}}, os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "A,G_min,G0,assen_satisfied,remark_lhs,remark_rhs");
}
