#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <json.hpp>

#include "oulab/errors.hpp"
#include "oulab/io.hpp"
#include "oulab/potential.hpp"
#include "oulab/profile.hpp"

namespace oulab {

// Delta u - <x, grad u> + f(u) on the square [-L, L]^2, uniform spacing h.
//
// Grid nodes x_i = (i - N/2) h with N = 2L/h even, so the grid is exactly
// symmetric and the discrete operator commutes bit-for-bit with u -> -u(-x).
// The centered stencil a+_i u_{i+1} + a-_i u_{i-1} - 2u_i/h^2 with
// a+- = (1 -+ x_i h/2)/h^2 is the weighted Laplacian of a discrete Gaussian
// rho_{i+1}/rho_i = (1 - x_i h/2)/(1 + x_{i+1} h/2). With the no-flux boundary
// the flow is an exact gradient flow of the discrete weighted energy; the default
// extrapolated boundary (zero second normal derivative) leaves the outgoing drift
// as pure outflow transport.

enum class FieldBoundary { extrapolate, no_flux };

struct Field2D {
  double L{5.0};
  double h{0.025};
  std::size_t n{0};  ///< nodes per side (N + 1)
  std::vector<double> values;  ///< row-major, values[j * n + i] = u(x_i, y_j)
  double steady_residual{std::numeric_limits<double>::quiet_NaN()};

  std::size_t intervals() const noexcept { return n - 1; }
  double coord(std::size_t i) const noexcept {
    return (static_cast<double>(i) - 0.5 * static_cast<double>(n - 1)) * h;
  }
  double& at(std::size_t i, std::size_t j) { return values[j * n + i]; }
  double at(std::size_t i, std::size_t j) const { return values[j * n + i]; }
};

/// Empty field on [-L, L]^2; L/h must be a positive integer.
inline Field2D make_field(double L, double h) {
  if (!(L > 0.0) || !(h > 0.0)) throw InvalidArgument("field needs L > 0 and h > 0");
  const double m = L / h;
  const double mr = std::round(m);
  if (std::abs(m - mr) > 1e-9 * std::max(1.0, m) || mr < 2) throw InvalidArgument("L/h must be an integer >= 2");
  if (h * L >= 2.0) throw InvalidArgument("h * L must be below 2 for a monotone drift stencil");
  Field2D f;
  f.L = L;
  f.h = h;
  f.n = 2 * static_cast<std::size_t>(mr) + 1;
  f.values.assign(f.n * f.n, 0.0);
  return f;
}

inline Field2D make_field(double L, double h, const std::function<double(double, double)>& u) {
  Field2D f = make_field(L, h);
  for (std::size_t j = 0; j < f.n; ++j)
    for (std::size_t i = 0; i < f.n; ++i) f.at(i, j) = u(f.coord(i), f.coord(j));
  return f;
}

/// Largest explicit-Euler step accepted by relax.
inline double stable_dt(double h, double L) { return h * h / (4.0 + 2.0 * h * L); }

namespace field_detail {

struct Stencil {
  std::vector<double> x, ap, am, rho;
  double c0;  // 4 / h^2
};

inline Stencil stencil(const Field2D& f) {
  Stencil s;
  const std::size_t n = f.n;
  const double h = f.h, h2 = h * h;
  s.x.resize(n), s.ap.resize(n), s.am.resize(n), s.rho.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.x[i] = f.coord(i);
    s.ap[i] = (1.0 - 0.5 * s.x[i] * h) / h2;
    s.am[i] = (1.0 + 0.5 * s.x[i] * h) / h2;
  }
  const std::size_t mid = (n - 1) / 2;
  s.rho[mid] = 1.0;
  for (std::size_t i = mid; i + 1 < n; ++i)
    s.rho[i + 1] = s.rho[i] * (1.0 - 0.5 * s.x[i] * h) / (1.0 + 0.5 * s.x[i + 1] * h);
  for (std::size_t i = mid; i > 0; --i) s.rho[i - 1] = s.rho[n - i];
  s.c0 = 4.0 / h2;
  return s;
}

// Residual at (i, j). Neighbour pairs are summed first so that the result is
// exactly odd under point reflection and exactly covariant under transposition.
inline double residual_at(const Field2D& f, const Stencil& s, const Potential& p, std::size_t i, std::size_t j,
                          FieldBoundary bc = FieldBoundary::extrapolate) {
  const std::size_t n = f.n;
  const double u = f.at(i, j);
  // ghost value beyond the edge, given the inward neighbour
  auto ghost = [&](double inner) { return bc == FieldBoundary::no_flux ? u : 2.0 * u - inner; };
  const double xp = i + 1 < n ? f.at(i + 1, j) : ghost(f.at(i - 1, j));
  const double xm = i > 0 ? f.at(i - 1, j) : ghost(f.at(i + 1, j));
  const double yp = j + 1 < n ? f.at(i, j + 1) : ghost(f.at(i, j - 1));
  const double ym = j > 0 ? f.at(i, j - 1) : ghost(f.at(i, j + 1));
  const double X = s.ap[i] * xp + s.am[i] * xm;
  const double Y = s.ap[j] * yp + s.am[j] * ym;
  return (X + Y) - s.c0 * u + p.f(u);
}

inline std::size_t core_lo(const Field2D& f) {
  return static_cast<std::size_t>(std::llround(1.0 / f.h));
}

}  // namespace field_detail

/// Per-node residual of the discrete equation.
inline std::vector<double> field_residual(const Field2D& f, const Potential& p,
                                          FieldBoundary bc = FieldBoundary::extrapolate) {
  const auto s = field_detail::stencil(f);
  std::vector<double> r(f.values.size());
  for (std::size_t j = 0; j < f.n; ++j)
    for (std::size_t i = 0; i < f.n; ++i) r[j * f.n + i] = field_detail::residual_at(f, s, p, i, j, bc);
  return r;
}

struct ResidualNorms {
  double weighted;  ///< max over the core of |R| e^{-|x|^2/2}
  double sup;       ///< unweighted max over the core
};

/// Core = nodes with max(|x|, |y|) <= L - 1 (the boundary collar of width 1 is excluded).
inline ResidualNorms core_residual(const Field2D& f, const Potential& p) {
  const auto s = field_detail::stencil(f);
  const std::size_t k = field_detail::core_lo(f);
  ResidualNorms out{0.0, 0.0};
  for (std::size_t j = k; j + k < f.n; ++j)
    for (std::size_t i = k; i + k < f.n; ++i) {
      const double r = std::abs(field_detail::residual_at(f, s, p, i, j));
      const double w = std::exp(-0.5 * (s.x[i] * s.x[i] + s.x[j] * s.x[j]));
      out.weighted = std::max(out.weighted, r * w);
      out.sup = std::max(out.sup, r);
    }
  return out;
}

/// h^2 [ sum over edges kappa (du/h)^2 / 2 + sum rho F(u) ], the discrete Gaussian energy.
inline double field_energy(const Field2D& f, const Potential& p) {
  const auto s = field_detail::stencil(f);
  const std::size_t n = f.n;
  const double h = f.h;
  double acc = 0.0, comp = 0.0;
  auto add = [&](double v) {
    const double t = acc + v;
    comp += std::abs(acc) >= std::abs(v) ? (acc - t) + v : (v - t) + acc;
    acc = t;
  };
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double u = f.at(i, j);
      const double rij = s.rho[i] * s.rho[j];
      add(h * h * rij * p.F(u));
      if (i + 1 < n) {
        const double kx = s.rho[i] * (1.0 - 0.5 * s.x[i] * h) * s.rho[j];
        const double d = f.at(i + 1, j) - u;
        add(0.5 * kx * d * d);
      }
      if (j + 1 < n) {
        const double ky = s.rho[j] * (1.0 - 0.5 * s.x[j] * h) * s.rho[i];
        const double d = f.at(i, j + 1) - u;
        add(0.5 * ky * d * d);
      }
    }
  return acc + comp;
}

struct RelaxOptions {
  double dt{0.0};  ///< 0 selects the stability bound
  long max_steps{400000};
  double tol{1e-5};
  long check_every{100};
  unsigned jobs{1};
  FieldBoundary boundary{FieldBoundary::extrapolate};
};

struct RelaxResult {
  Field2D field;
  long steps{0};
  bool converged{false};
  double dt{0.0};
  std::vector<double> energy;          ///< every check_every steps, starting at step 0
  double max_energy_increase{0.0};     ///< largest rise between consecutive checks
  double min_value{0.0}, max_value{0.0};
  ResidualNorms residual{0.0, 0.0};
};

/// Explicit Euler for u_t = Delta u - <x, grad u> + f(u) until the weighted core
/// residual drops to tol.
inline RelaxResult relax(const Potential& p, const Field2D& u0, const RelaxOptions& opt = {}) {
  const double bound = stable_dt(u0.h, u0.L);
  const double dt = opt.dt > 0.0 ? opt.dt : bound;
  if (dt > bound * (1.0 + 1e-12)) throw InvalidArgument("dt exceeds the explicit stability bound h^2/(4 + 2hL)");
  if (!(opt.tol > 0.0) || opt.max_steps < 0 || opt.check_every < 1) throw InvalidArgument("bad relax options");
  const auto s = field_detail::stencil(u0);
  const std::size_t n = u0.n;

  RelaxResult res;
  res.dt = dt;
  Field2D cur = u0, next = u0;
  auto sweep = [&](std::size_t j0, std::size_t j1) {
    for (std::size_t j = j0; j < j1; ++j)
      for (std::size_t i = 0; i < n; ++i)
        next.at(i, j) = cur.at(i, j) + dt * field_detail::residual_at(cur, s, p, i, j, opt.boundary);
  };
  const unsigned jobs = std::max(1u, opt.jobs);

  long step = 0;
  for (;; ++step) {
    if (step % opt.check_every == 0) {
      res.residual = core_residual(cur, p);
      const double e = field_energy(cur, p);
      if (!std::isfinite(e) || !std::isfinite(res.residual.weighted)) throw DivergenceError("non-finite field", step);
      if (!res.energy.empty()) res.max_energy_increase = std::max(res.max_energy_increase, e - res.energy.back());
      res.energy.push_back(e);
      if (res.residual.weighted <= opt.tol) {
        res.converged = true;
        break;
      }
    }
    if (step >= opt.max_steps) break;
    if (jobs == 1) {
      sweep(0, n);
    } else {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(sweep, n * t / jobs, n * (t + 1) / jobs);
    }
    std::swap(cur.values, next.values);
  }
  res.steps = step;
  for (double v : cur.values)
    if (!std::isfinite(v)) throw DivergenceError("non-finite field value", step);
  const auto [lo, hi] = std::minmax_element(cur.values.begin(), cur.values.end());
  res.min_value = *lo;
  res.max_value = *hi;
  cur.steady_residual = res.residual.weighted;
  res.field = std::move(cur);
  return res;
}

struct NewtonOptions {
  double tol{1e-10};       ///< sup of the residual over the whole grid
  int max_iter{200};
  double tau0{1e6};        ///< first pseudo-time step (large: damped Newton from the start)
  double tau_max{1e12};
  FieldBoundary boundary{FieldBoundary::extrapolate};
};

struct NewtonResult {
  Field2D field;
  bool converged{false};
  int iterations{0};
  std::vector<double> residual_history;  ///< full-grid sup residual before each step and at exit
  double energy_before{0.0}, energy_after{0.0};
  ResidualNorms residual{0.0, 0.0};
};

/// Pseudo-transient continuation (implicit Euler with a growing step, Newton in the
/// limit) for the same discrete equation. The slow rotational drift of a nearly
/// flat front under explicit stepping is resolved in a handful of steps.
inline NewtonResult relax_newton(const Potential& p, const Field2D& u0, const NewtonOptions& opt = {}) {
  if (!(opt.tol > 0.0) || !(opt.tau0 > 0.0) || opt.max_iter < 1) throw InvalidArgument("bad Newton options");
  const auto s = field_detail::stencil(u0);
  const std::size_t n = u0.n;
  const auto N = static_cast<Eigen::Index>(n * n);
  using Triplet = Eigen::Triplet<double>;

  // linear part of the operator, boundary ghosts folded in
  std::vector<Triplet> lin;
  lin.reserve(static_cast<std::size_t>(N) * 7);
  auto idx = [n](std::size_t i, std::size_t j) { return static_cast<Eigen::Index>(j * n + i); };
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = idx(i, j);
      lin.emplace_back(r, r, -s.c0);
      auto side = [&](bool has, Eigen::Index nb, Eigen::Index inner, double a) {
        if (has) {
          lin.emplace_back(r, nb, a);
        } else if (opt.boundary == FieldBoundary::no_flux) {
          lin.emplace_back(r, r, a);
        } else {
          lin.emplace_back(r, r, 2.0 * a);
          lin.emplace_back(r, inner, -a);
        }
      };
      side(i + 1 < n, i + 1 < n ? idx(i + 1, j) : 0, i > 0 ? idx(i - 1, j) : 0, s.ap[i]);
      side(i > 0, i > 0 ? idx(i - 1, j) : 0, i + 1 < n ? idx(i + 1, j) : 0, s.am[i]);
      side(j + 1 < n, j + 1 < n ? idx(i, j + 1) : 0, j > 0 ? idx(i, j - 1) : 0, s.ap[j]);
      side(j > 0, j > 0 ? idx(i, j - 1) : 0, j + 1 < n ? idx(i, j + 1) : 0, s.am[j]);
    }

  NewtonResult res;
  Field2D cur = u0;
  res.energy_before = field_energy(cur, p);
  auto full_residual = [&](const Field2D& f, Eigen::VectorXd& R) {
    R.resize(N);
    double m = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) {
        const double r = field_detail::residual_at(f, s, p, i, j, opt.boundary);
        R[idx(i, j)] = r;
        m = std::max(m, std::abs(r));
      }
    return m;
  };
  Eigen::VectorXd R;
  double norm = full_residual(cur, R);
  double tau = opt.tau0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool pattern = false;
  for (int it = 0;; ++it) {
    res.residual_history.push_back(norm);
    if (!std::isfinite(norm)) throw DivergenceError("non-finite residual in Newton relaxation", it);
    if (norm <= opt.tol) {
      res.converged = true;
      break;
    }
    if (it >= opt.max_iter) break;
    std::vector<Triplet> t = lin;
    for (std::size_t k = 0; k < cur.values.size(); ++k) {
      const auto r = static_cast<Eigen::Index>(k);
      t.emplace_back(r, r, -p.fprime(cur.values[k]) + 1.0 / tau);
    }
    // assembled as (I / tau - J)
    for (std::size_t k = 0; k < lin.size(); ++k) t[k] = Triplet(lin[k].row(), lin[k].col(), -lin[k].value());
    Eigen::SparseMatrix<double> M(N, N);
    M.setFromTriplets(t.begin(), t.end());
    M.makeCompressed();
    if (!pattern) {
      lu.analyzePattern(M);
      pattern = true;
    }
    lu.factorize(M);
    if (lu.info() != Eigen::Success) throw DivergenceError("singular Newton matrix", it);
    const Eigen::VectorXd d = lu.solve(R);
    // backtracking on the Euclidean residual norm
    const double r2 = R.norm();
    Field2D trial = cur;
    Eigen::VectorXd Rt;
    double nt = 0.0, alpha = 1.0;
    bool accepted = false;
    for (; alpha >= 1.0 / 1024; alpha *= 0.5) {
      for (std::size_t k = 0; k < cur.values.size(); ++k)
        trial.values[k] = cur.values[k] + alpha * d[static_cast<Eigen::Index>(k)];
      nt = full_residual(trial, Rt);
      if (Rt.norm() <= (1.0 - 1e-4 * alpha) * r2) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (tau <= opt.tau0 * 1e-6) break;
      tau *= 0.1;
      continue;
    }
    if (alpha == 1.0) tau = std::min(opt.tau_max, tau * std::max(2.0, norm / nt));
    cur = std::move(trial);
    R = std::move(Rt);
    norm = nt;
    ++res.iterations;
  }
  res.energy_after = field_energy(cur, p);
  res.residual = core_residual(cur, p);
  cur.steady_residual = res.residual.weighted;
  res.field = std::move(cur);
  return res;
}

/// Field U(<omega, x>) from a profile (odd extension of half-line profiles, +-c beyond its grid).
inline Field2D lift_1d(const Profile1D& prof, double wx, double wy, double L, double h) {
  if (std::abs(std::hypot(wx, wy) - 1.0) > 1e-12) throw InvalidArgument("omega must be a unit vector");
  const ProfileEvaluator ev(prof);
  Field2D f = make_field(L, h);
  for (std::size_t j = 0; j < f.n; ++j)
    for (std::size_t i = 0; i < f.n; ++i) {
      const double x = f.coord(i), y = f.coord(j);
      // exact node arithmetic for the axis cases
      const double s = wy == 0.0 ? wx * x : wx == 0.0 ? wy * y : wx * x + wy * y;
      f.at(i, j) = ev.value(s);
    }
  return f;
}

/// Field rotated by 90 degrees counter-clockwise: out(x, y) = in(y, -x).
inline Field2D rotate90(const Field2D& in) {
  Field2D out = in;
  const std::size_t n = in.n;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) out.at(i, j) = in.at(j, n - 1 - i);
  return out;
}

// ----------------------------------------------------------------------------
// One-dimensionality diagnostics

struct FlatnessReport {
  double direction[2]{0.0, 0.0};
  double angular_spread{0.0};
  bool monotone_along_w{false};
  double min_directional_derivative{0.0};
  bool one_dimensional{false};
  bool degenerate{false};  ///< no core node above the gradient floor (constant field)
  std::size_t counted_nodes{0};
};

inline constexpr double kFlatnessThreshold = 1e-2;

/// Centered gradient at interior node (i, j).
inline std::pair<double, double> field_gradient(const Field2D& f, std::size_t i, std::size_t j) {
  return {(f.at(i + 1, j) - f.at(i - 1, j)) / (2 * f.h), (f.at(i, j + 1) - f.at(i, j - 1)) / (2 * f.h)};
}

inline FlatnessReport flatness(const Field2D& f, double wx, double wy, double gradient_floor = 1e-2,
                               double threshold = kFlatnessThreshold) {
  if (!(gradient_floor > 0.0)) throw InvalidArgument("gradient floor must be > 0");
  const std::size_t k = field_detail::core_lo(f);
  FlatnessReport r;
  double sx = 0.0, sy = 0.0;
  double min_dir = std::numeric_limits<double>::infinity();
  for (std::size_t j = k; j + k < f.n; ++j)
    for (std::size_t i = k; i + k < f.n; ++i) {
      const auto [gx, gy] = field_gradient(f, i, j);
      min_dir = std::min(min_dir, gx * wx + gy * wy);
      const double m = std::hypot(gx, gy);
      if (m <= gradient_floor) continue;
      const double x = f.coord(i), y = f.coord(j);
      const double w = std::exp(-0.5 * (x * x + y * y));
      sx += w * gx / m;
      sy += w * gy / m;
      ++r.counted_nodes;
    }
  r.min_directional_derivative = min_dir;
  r.monotone_along_w = min_dir > 0.0;
  const double norm = std::hypot(sx, sy);
  if (r.counted_nodes == 0 || norm == 0.0) {
    r.degenerate = true;
    r.one_dimensional = true;
    return r;
  }
  r.direction[0] = sx / norm;
  r.direction[1] = sy / norm;
  for (std::size_t j = k; j + k < f.n; ++j)
    for (std::size_t i = k; i + k < f.n; ++i) {
      const auto [gx, gy] = field_gradient(f, i, j);
      const double m = std::hypot(gx, gy);
      if (m <= gradient_floor) continue;
      const double cr = (gx * r.direction[1] - gy * r.direction[0]) / m;
      const double dot = (gx * r.direction[0] + gy * r.direction[1]) / m;
      r.angular_spread = std::max(r.angular_spread, std::atan2(std::abs(cr), dot));
    }
  r.one_dimensional = r.angular_spread < threshold;
  return r;
}

inline nlohmann::json to_json(const FlatnessReport& r) {
  return {{"direction", {r.direction[0], r.direction[1]}},
          {"angular_spread", r.angular_spread},
          {"monotone_along_w", r.monotone_along_w},
          {"min_directional_derivative", r.min_directional_derivative},
          {"one_dimensional", r.one_dimensional},
          {"degenerate", r.degenerate},
          {"counted_nodes", r.counted_nodes}};
}

// ----------------------------------------------------------------------------
// Export

inline void write_field_csv(const Field2D& f, std::ostream& os) {
  io::CsvWriter w(os);
  w.header({"x", "y", "u"});
  for (std::size_t j = 0; j < f.n; ++j)
    for (std::size_t i = 0; i < f.n; ++i) w.row(f.coord(i), f.coord(j), f.at(i, j));
}

namespace field_detail {
template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  for (std::size_t k = 0; k < sizeof(T); ++k) b[k] = static_cast<unsigned char>((v >> (8 * k)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), sizeof b);
}
template <class T>
T get_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof b)) throw Error("truncated field file");
  T v = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) v |= static_cast<T>(b[k]) << (8 * k);
  return v;
}
}  // namespace field_detail

inline constexpr std::uint16_t kFieldFormatVersion = 1;

/// 16-byte header: "OUF2", u16 version, u16 nx, u32 ny, 4 reserved zero bytes;
/// then nx * ny little-endian f64 in row-major order (x fastest).
inline void write_field_binary(const Field2D& f, std::ostream& os) {
  if (f.n > 0xffff) throw InvalidArgument("field too large for the binary header");
  os.write("OUF2", 4);
  field_detail::put_le<std::uint16_t>(os, kFieldFormatVersion);
  field_detail::put_le<std::uint16_t>(os, static_cast<std::uint16_t>(f.n));
  field_detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.n));
  field_detail::put_le<std::uint32_t>(os, 0);
  for (double v : f.values) field_detail::put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
}

/// Reads the array back (L and h are not stored; the caller supplies them).
inline Field2D read_field_binary(std::istream& is, double L, double h) {
  char magic[4];
  if (!is.read(magic, 4) || std::string_view(magic, 4) != "OUF2") throw Error("not an OUF2 field file");
  if (field_detail::get_le<std::uint16_t>(is) != kFieldFormatVersion) throw Error("unsupported field file version");
  const auto nx = field_detail::get_le<std::uint16_t>(is);
  const auto ny = field_detail::get_le<std::uint32_t>(is);
  field_detail::get_le<std::uint32_t>(is);
  Field2D f = make_field(L, h);
  if (nx != f.n || ny != f.n) throw Error("field file size does not match L and h");
  for (double& v : f.values) v = std::bit_cast<double>(field_detail::get_le<std::uint64_t>(is));
  return f;
}

}  // namespace oulab
