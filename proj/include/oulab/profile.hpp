#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "oulab/errors.hpp"
#include "oulab/io.hpp"
#include "oulab/potential.hpp"

namespace oulab {

/// A candidate heteroclinic profile sampled on a strictly increasing grid,
/// either the half line [0, T] (odd profiles, U(0) = 0) or a symmetric [-T, T].
///
/// `residual` holds the producer's discrete ODE residual per node: the
/// finite-difference equations for collocated profiles, a fourth-order Hermite
/// stencil for integrated (shooting) profiles.
struct Profile1D {
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> derivative;
  std::vector<double> residual;
  double c{1.0};
  double residual_sup{std::numeric_limits<double>::quiet_NaN()};
  bool monotone{false};

  std::size_t size() const noexcept { return grid.size(); }
  bool half_line() const noexcept { return !grid.empty() && grid.front() == 0.0; }
  double T() const noexcept { return grid.empty() ? 0.0 : grid.back(); }
};

/// Uniform grid of n intervals on [a, b] (n + 1 nodes).
inline std::vector<double> uniform_grid(double a, double b, std::size_t n) {
  if (n == 0) throw InvalidArgument("grid needs at least one interval");
  std::vector<double> g(n + 1);
  const double h = (b - a) / static_cast<double>(n);
  for (std::size_t i = 0; i <= n; ++i) g[i] = a + h * static_cast<double>(i);
  g[n] = b;
  return g;
}

/// Centered differences inside, second-order one-sided at the ends.
inline std::vector<double> fd_derivative(std::span<const double> t, std::span<const double> u) {
  const std::size_t n = t.size();
  std::vector<double> d(n, 0.0);
  if (n < 3) {
    if (n == 2) d[0] = d[1] = (u[1] - u[0]) / (t[1] - t[0]);
    return d;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (u[i + 1] - u[i - 1]) / (t[i + 1] - t[i - 1]);
  const double h0 = t[1] - t[0], hn = t[n - 1] - t[n - 2];
  d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h0);
  d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * hn);
  return d;
}

inline bool strictly_increasing_interior(const Profile1D& p) {
  if (p.size() < 3) return false;
  for (std::size_t i = 1; i + 1 < p.size(); ++i)
    if (!(p.derivative[i] > 0.0)) return false;
  return true;
}

/// Cubic Hermite evaluation of a profile from its stored values and derivatives.
/// Half-line profiles are extended oddly; outside the grid the limits +-c are used.
class ProfileEvaluator {
 public:
  explicit ProfileEvaluator(const Profile1D& p) : p_(&p) {
    if (p.size() < 2) throw InvalidArgument("profile needs at least two nodes");
  }

  double value(double t) const { return eval(t).first; }
  double slope(double t) const { return eval(t).second; }

  /// (U(t), U'(t))
  std::pair<double, double> eval(double t) const {
    const auto& g = p_->grid;
    if (p_->half_line() && t < 0.0) {
      const auto [u, du] = eval(-t);
      return {-u, du};
    }
    if (t > g.back()) return {p_->c, 0.0};
    if (t == g.back()) return {p_->values.back(), p_->derivative.back()};
    if (t <= g.front()) return {p_->half_line() ? p_->values.front() : -p_->c, 0.0};
    std::size_t i = static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), t) - g.begin()) - 1;
    i = std::min(i, g.size() - 2);
    const double h = g[i + 1] - g[i];
    const double s = (t - g[i]) / h;
    const double y0 = p_->values[i], y1 = p_->values[i + 1];
    const double m0 = p_->derivative[i] * h, m1 = p_->derivative[i + 1] * h;
    const double s2 = s * s, s3 = s2 * s;
    const double v = (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * y1 +
                     (s3 - s2) * m1;
    const double dv = ((6 * s2 - 6 * s) * y0 + (3 * s2 - 4 * s + 1) * m0 + (-6 * s2 + 6 * s) * y1 +
                       (3 * s2 - 2 * s) * m1) / h;
    return {v, dv};
  }

 private:
  const Profile1D* p_;
};

/// Finite-difference residual U'' - t U' + f(U) at interior nodes of a uniform grid.
inline std::vector<double> fd_ode_residual(const Profile1D& prof, const Potential& p) {
  const std::size_t n = prof.size();
  std::vector<double> r(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h = 0.5 * (prof.grid[i + 1] - prof.grid[i - 1]);
    const double up = prof.values[i + 1], u = prof.values[i], um = prof.values[i - 1];
    r[i] = (up - 2.0 * u + um) / (h * h) - prof.grid[i] * (up - um) / (2.0 * h) + p.f(u);
  }
  return r;
}

/// Fourth-order residual from (U, U') data on a uniform grid:
/// U''_i ~ 2 (U_{i+1} - 2U_i + U_{i-1}) / h^2 - (U'_{i+1} - U'_{i-1}) / (2h).
inline std::vector<double> hermite_ode_residual(const Profile1D& prof, const Potential& p) {
  const std::size_t n = prof.size();
  std::vector<double> r(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h = 0.5 * (prof.grid[i + 1] - prof.grid[i - 1]);
    const auto& U = prof.values;
    const auto& D = prof.derivative;
    const double upp = 2.0 * (U[i + 1] - 2.0 * U[i] + U[i - 1]) / (h * h) - (D[i + 1] - D[i - 1]) / (2.0 * h);
    r[i] = upp - prof.grid[i] * D[i] + p.f(U[i]);
  }
  return r;
}

inline double sup_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Full-line profile on [-T, T] from a half-line profile with U(0) = 0.
inline Profile1D odd_extension(const Profile1D& half) {
  if (!half.half_line()) throw InvalidArgument("odd_extension expects a half-line profile");
  if (half.values.front() != 0.0) throw InvalidArgument("odd_extension expects U(0) = 0");
  Profile1D full;
  full.c = half.c;
  full.monotone = half.monotone;
  full.residual_sup = half.residual_sup;
  const std::size_t n = half.size();
  for (std::size_t k = n; k-- > 1;) {
    full.grid.push_back(-half.grid[k]);
    full.values.push_back(-half.values[k]);
    full.derivative.push_back(half.derivative[k]);
    full.residual.push_back(half.residual.empty() ? 0.0 : -half.residual[k]);
  }
  for (std::size_t k = 0; k < n; ++k) {
    full.grid.push_back(half.grid[k]);
    full.values.push_back(half.values[k]);
    full.derivative.push_back(half.derivative[k]);
    full.residual.push_back(half.residual.empty() ? 0.0 : half.residual[k]);
  }
  return full;
}

/// CSV columns t, U, Uprime, residual.
inline void write_profile_csv(const Profile1D& p, std::ostream& os) {
  io::CsvWriter w(os);
  w.header({"t", "U", "Uprime", "residual"});
  for (std::size_t i = 0; i < p.size(); ++i)
    w.row(p.grid[i], p.values[i], p.derivative[i], p.residual.empty() ? 0.0 : p.residual[i]);
}

}  // namespace oulab
