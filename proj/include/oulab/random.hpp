#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "oulab/profile.hpp"

namespace oulab {

/// Seeded generator with a platform-independent uniform draw
/// (std::uniform_real_distribution is not bit-reproducible across libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

 private:
  std::mt19937_64 eng_;
};

/// Smooth random half-line profile c sin^2(phi(t)) with phi a short random
/// sine series, so U(0) = 0, values in [0, c] and U' is exact.
inline Profile1D random_profile(Rng& rng, double c, double T, std::size_t n, int modes = 4) {
  std::vector<double> amp(modes), freq(modes);
  for (int k = 0; k < modes; ++k) {
    amp[k] = rng.uniform(-1.2, 1.2);
    freq[k] = rng.uniform(0.2, 2.0);
  }
  Profile1D p;
  p.c = c;
  p.grid = uniform_grid(0.0, T, n);
  p.values.resize(n + 1);
  p.derivative.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = p.grid[i];
    double phi = 0.0, dphi = 0.0;
    for (int k = 0; k < modes; ++k) {
      phi += amp[k] * std::sin(freq[k] * t);
      dphi += amp[k] * freq[k] * std::cos(freq[k] * t);
    }
    const double s = std::sin(phi);
    p.values[i] = c * s * s;
    p.derivative[i] = c * std::sin(2.0 * phi) * dphi;
  }
  p.values[0] = 0.0;
  return p;
}

}  // namespace oulab
