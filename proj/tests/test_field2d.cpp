#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "oulab/field2d.hpp"
#include "oulab/heteroclinic.hpp"

using namespace oulab;

namespace {

constexpr double kL = 4.0, kH = 0.1;

Field2D tanh_sine() {
  return make_field(kL, kH, [](double x, double y) { return std::tanh(x + 0.3 * std::sin(y)); });
}

// Discrete 1D solution on the same spacing as the 2D grid.
const Profile1D& profile_a4() {
  static const Profile1D prof = [] {
    const auto p = potential::double_well(4.0);
    const auto sh = shoot(p, 8.0);
    CollocationOptions o;
    o.n = 80;
    return collocate(p, *sh.profile, 8.0, o).profile;
  }();
  return prof;
}

}  // namespace

TEST(Field, GridLayout) {
  const auto f = make_field(kL, kH);
  EXPECT_EQ(f.n, 81u);
  EXPECT_DOUBLE_EQ(f.coord(0), -4.0);
  EXPECT_DOUBLE_EQ(f.coord(40), 0.0);
  EXPECT_DOUBLE_EQ(f.coord(80), 4.0);
  EXPECT_THROW(make_field(3.0, 0.07), InvalidArgument);
  EXPECT_THROW(make_field(5.0, 0.5), InvalidArgument);
  EXPECT_THROW(make_field(0.0, 0.1), InvalidArgument);
}

TEST(Field, RelaxRejectsUnstableStep) {
  RelaxOptions o;
  o.dt = 1.01 * stable_dt(kH, kL);
  o.max_steps = 1;
  EXPECT_THROW(relax(potential::double_well(4.0), tanh_sine(), o), InvalidArgument);
}

TEST(Field, RelaxDecreasesEnergyAndStaysBounded) {
  RelaxOptions o;
  o.max_steps = 2000;
  o.check_every = 50;
  const auto r = relax(potential::double_well(4.0), tanh_sine(), o);
  ASSERT_GE(r.energy.size(), 2u);
  EXPECT_LE(r.max_energy_increase, 1e-12);
  EXPECT_LT(r.energy.back(), r.energy.front());
  EXPECT_GE(r.min_value, -1.0 - 1e-12);
  EXPECT_LE(r.max_value, 1.0 + 1e-12);
}

TEST(Field, NoFluxFlowIsExactGradientFlow) {
  // with mirrored ghosts the scheme descends E_h even where the boundary carries weight
  RelaxOptions o;
  o.max_steps = 2000;
  o.check_every = 10;
  o.boundary = FieldBoundary::no_flux;
  const auto f = make_field(3.0, 0.1, [](double x, double y) { return std::tanh(x + 0.3 * std::sin(y)); });
  const auto r = relax(potential::double_well(4.0), f, o);
  EXPECT_EQ(r.max_energy_increase, 0.0);
}

TEST(Field, RelaxDetectsBlowUp) {
  auto f = make_field(kL, kH, [](double, double) { return 1e120; });
  RelaxOptions o;
  o.max_steps = 50;
  EXPECT_THROW(relax(potential::double_well(4.0), f, o), DivergenceError);
}

TEST(Field, ResidualIsRotationEquivariant) {
  const auto p = potential::double_well(4.0);
  const auto f = tanh_sine();
  const auto r = field_residual(f, p);
  const auto g = field_residual(rotate90(f), p);
  Field2D rf = f;
  rf.values = r;
  EXPECT_EQ(rotate90(rf).values, g);
  EXPECT_DOUBLE_EQ(field_energy(f, p), field_energy(rotate90(f), p));
}

TEST(Field, AxisLiftIsSteady) {
  const auto p = potential::double_well(4.0);
  const auto f = lift_1d(profile_a4(), 1.0, 0.0, kL, kH);
  EXPECT_LE(core_residual(f, p).weighted, 1e-9);
  const auto fl = flatness(f, 1.0, 0.0);
  EXPECT_EQ(fl.angular_spread, 0.0);
  EXPECT_TRUE(fl.one_dimensional);
  EXPECT_TRUE(fl.monotone_along_w);
  EXPECT_DOUBLE_EQ(fl.direction[0], 1.0);
  const auto t = lift_1d(profile_a4(), 0.0, 1.0, kL, kH);
  EXPECT_LE(core_residual(t, p).weighted, 1e-9);
}

TEST(Field, NewtonReachesOneDimensionalState) {
  const auto p = potential::double_well(4.0);
  const auto r = relax_newton(p, tanh_sine());
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.residual.weighted, 1e-10);
  EXPECT_LE(r.energy_after, r.energy_before);
  for (std::size_t k = 1; k < r.residual_history.size(); ++k)
    EXPECT_LE(r.residual_history.back(), r.residual_history[k - 1]);
  const auto fl = flatness(r.field, 1.0, 0.0);
  EXPECT_LT(fl.angular_spread, kFlatnessThreshold);
  EXPECT_TRUE(fl.monotone_along_w);
}

TEST(Field, ZeroFieldIsDegenerate) {
  const auto fl = flatness(make_field(kL, kH), 1.0, 0.0);
  EXPECT_TRUE(fl.degenerate);
  EXPECT_TRUE(fl.one_dimensional);
  EXPECT_EQ(fl.counted_nodes, 0u);
}

TEST(Field, BinaryRoundTrip) {
  const auto f = tanh_sine();
  std::stringstream ss;
  write_field_binary(f, ss);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 16 + 8 * f.values.size());
  EXPECT_EQ(bytes.substr(0, 4), "OUF2");
  const auto g = read_field_binary(ss, kL, kH);
  EXPECT_EQ(g.values, f.values);
  std::stringstream bad("XXXX0000");
  EXPECT_THROW(read_field_binary(bad, kL, kH), Error);
  std::stringstream other(bytes);
  EXPECT_THROW(read_field_binary(other, kL, 0.05), Error);
}

TEST(Field, CsvHasOneRowPerNode) {
  const auto f = make_field(1.0, 0.5);
  std::ostringstream os;
  write_field_csv(f, os);
  const std::string s = os.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 25);
  EXPECT_EQ(s.substr(0, 6), "x,y,u\n");
}
