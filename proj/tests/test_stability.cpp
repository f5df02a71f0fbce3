#include <cmath>

#include <gtest/gtest.h>

#include "oulab/heteroclinic.hpp"
#include "oulab/stability.hpp"

using namespace oulab;

TEST(Spectrum, ConstantStatesMatchDiagonalOracle) {
  // Around a constant the operator is diagonal in the Hermite basis: k - f'(value).
  for (double A : {0.5, 1.0, 4.0}) {
    const auto p = potential::double_well(A);
    const auto r0 = linearized_spectrum(p, 0.0, 4, 128);
    const auto r1 = linearized_spectrum(p, 1.0, 4, 128);
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(r0.eigenvalues[k], static_cast<double>(k) - A, 1e-8);
      EXPECT_NEAR(r1.eigenvalues[k], static_cast<double>(k) + 2.0 * A, 1e-8);
    }
    EXPECT_EQ(r0.stable, A <= 1.0 + kStabilitySlack);
    EXPECT_TRUE(r1.stable);
  }
}

TEST(Spectrum, HeteroclinicGroundStateIsUPrime) {
  const auto p = potential::double_well(4.0);
  const auto sh = shoot(p, 8.0);
  ASSERT_TRUE(sh.profile.has_value());
  const Profile1D& full = *sh.profile;  // evaluated as an odd function
  const auto r = linearized_spectrum(p, full, 4, 256);
  EXPECT_NEAR(r.eigenvalues.front(), -1.0, 1e-6);
  EXPECT_LE(ground_state_mismatch(r, full), 1e-5);
  EXPECT_TRUE(r.stable);
  for (std::size_t k = 1; k < r.eigenvalues.size(); ++k) EXPECT_GE(r.eigenvalues[k], r.eigenvalues[k - 1]);

  const auto q = stability_inequality_check(r, {derivative_trial(full, p)});
  EXPECT_TRUE(q.satisfied);
  EXPECT_NEAR(q.values[0], 0.0, 1e-5);

  Rng rng(5);
  std::vector<TrialFunction> trials;
  for (int i = 0; i < 10; ++i) trials.push_back(random_trial(rng));
  EXPECT_TRUE(stability_inequality_check(r, trials).satisfied);
}

TEST(Spectrum, RejectsOversizedBasis) {
  const auto p = potential::double_well(1.0);
  EXPECT_THROW(linearized_spectrum(p, 0.0, 4, kMaxBasisSize + 1), InvalidArgument);
}

TEST(Spectrum, CsvWriters) {
  const auto r = linearized_spectrum(potential::double_well(1.0), 0.0, 3, 32);
  std::ostringstream a, b;
  write_eigenvalues_csv(r, a);
  write_eigenfunction_csv(r, 0, b);
  EXPECT_EQ(a.str().substr(0, 17), "index,eigenvalue\n");
  EXPECT_EQ(b.str().substr(0, 11), "node,value\n");
}
