#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include <json.hpp>

#include "oulab/errors.hpp"
#include "oulab/field2d.hpp"
#include "oulab/potential.hpp"

namespace oulab {

// Level-set geometry of 2D fields. At a noncritical point, with n = grad u / |grad u|
// and T the unit tangent of the level line,
//   |D^2 u|^2 - |grad |grad u||^2 = |grad u|^2 kappa^2 + (T . grad |grad u|)^2,
// kappa = div n the level-line curvature.

inline constexpr double kDefaultCriticalFloor = 1e-3;

struct PoincareReport {
  double lhs_pointwise_max_error{0.0};
  double lhs_integral{std::numeric_limits<double>::quiet_NaN()};
  double rhs_integral{std::numeric_limits<double>::quiet_NaN()};
  double rhs_integral_next{std::numeric_limits<double>::quiet_NaN()};  ///< same field, cutoff radius R + 1
  bool inequality_satisfied{false};
  double noncritical_fraction{0.0};
  double min_D{0.0};                      ///< most negative D over noncritical nodes
  double excluded_gradient_integral{0.0};  ///< int |grad u| dgamma over the excluded (critical) nodes
  double core_measure{0.0};
  double R{std::numeric_limits<double>::quiet_NaN()};
};

/// Quintic cutoff: 1 for s <= R, 0 for s >= R + 1, |slope| <= 15/8.
inline double cutoff(double s, double R) {
  const double t = s - R;
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

inline double cutoff_slope(double s, double R) {
  const double t = s - R;
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return -30.0 * t * t * (1.0 - t) * (1.0 - t);
}

namespace geometry_detail {

struct NodeGeometry {
  double m;      // |grad u|
  double D;      // |D^2 u|^2 - |grad m|^2
  double sos;    // m^2 kappa^2 + (T . grad m)^2
  double x, y;
};

// Walks the core and hands every node's geometry to `visit`.
template <class Visit>
void for_each_core_node(const Field2D& f, Visit&& visit) {
  const std::size_t n = f.n;
  const double h = f.h;
  const std::size_t k = field_detail::core_lo(f);
  if (k < 2) throw InvalidArgument("grid too coarse for the geometry stencils (need L - 1 >= 2h margin)");
  // |grad u| on the core plus a one-node collar
  std::vector<double> m(n * n, 0.0);
  for (std::size_t j = k - 1; j + k <= n; ++j)
    for (std::size_t i = k - 1; i + k <= n; ++i) {
      const auto [gx, gy] = field_gradient(f, i, j);
      m[j * n + i] = std::hypot(gx, gy);
    }
  const double h2 = h * h;
  for (std::size_t j = k; j + k < n; ++j)
    for (std::size_t i = k; i + k < n; ++i) {
      const double u = f.at(i, j);
      const auto [ux, uy] = field_gradient(f, i, j);
      const double uxx = (f.at(i + 1, j) - 2.0 * u + f.at(i - 1, j)) / h2;
      const double uyy = (f.at(i, j + 1) - 2.0 * u + f.at(i, j - 1)) / h2;
      const double uxy =
          (f.at(i + 1, j + 1) - f.at(i + 1, j - 1) - f.at(i - 1, j + 1) + f.at(i - 1, j - 1)) / (4.0 * h2);
      const double mm = m[j * n + i];
      const double gx = (m[j * n + i + 1] - m[j * n + i - 1]) / (2.0 * h);
      const double gy = (m[(j + 1) * n + i] - m[(j - 1) * n + i]) / (2.0 * h);
      NodeGeometry g{mm, 0.0, 0.0, f.coord(i), f.coord(j)};
      g.D = uxx * uxx + 2.0 * uxy * uxy + uyy * uyy - (gx * gx + gy * gy);
      if (mm > 0.0) {
        const double kappa_m = (uxx * uy * uy - 2.0 * ux * uy * uxy + uyy * ux * ux) / (mm * mm);  // m kappa
        const double tg = (-uy * gx + ux * gy) / mm;
        g.sos = kappa_m * kappa_m + tg * tg;
      }
      visit(g);
    }
}

inline double gaussian_density(double x, double y) {
  return std::exp(-0.5 * (x * x + y * y)) / (2.0 * std::numbers::pi);
}

}  // namespace geometry_detail

/// Pointwise check of the identity on the noncritical core nodes (|grad u| > floor).
inline PoincareReport sz_identity_check(const Field2D& f, double floor = kDefaultCriticalFloor) {
  if (!(floor > 0.0)) throw InvalidArgument("critical floor must be > 0");
  PoincareReport r;
  std::size_t total = 0, kept = 0;
  r.min_D = std::numeric_limits<double>::infinity();
  geometry_detail::for_each_core_node(f, [&](const geometry_detail::NodeGeometry& g) {
    ++total;
    if (g.m <= floor) return;
    ++kept;
    r.min_D = std::min(r.min_D, g.D);
    r.lhs_pointwise_max_error = std::max(r.lhs_pointwise_max_error, std::abs(g.D - g.sos) / std::max(g.D, 1e-12));
  });
  r.noncritical_fraction = total ? static_cast<double>(kept) / static_cast<double>(total) : 0.0;
  if (r.noncritical_fraction < 0.01) throw DegenerateFieldError("fewer than 1% noncritical core nodes");
  return r;
}

/// Relative identity error at every core node (NaN at critical nodes), row-major over the core.
inline std::vector<double> sz_identity_errors(const Field2D& f, double floor = kDefaultCriticalFloor) {
  std::vector<double> out;
  geometry_detail::for_each_core_node(f, [&](const geometry_detail::NodeGeometry& g) {
    out.push_back(g.m > floor ? std::abs(g.D - g.sos) / std::max(g.D, 1e-12) : std::numeric_limits<double>::quiet_NaN());
  });
  return out;
}

struct RefinementOrder {
  double coarse_error;
  double fine_error;
  double order;  ///< log2(coarse / fine)
};

/// Identity error of an analytic field sampled at spacing h and h/2, compared on
/// the coarse nodes (which are also fine nodes) that are noncritical on both grids.
inline RefinementOrder identity_refinement_order(const std::function<double(double, double)>& u, double L, double h,
                                                 double floor) {
  const Field2D fc = make_field(L, h, u), ff = make_field(L, 0.5 * h, u);
  const auto ec = sz_identity_errors(fc, floor), ef = sz_identity_errors(ff, floor);
  const std::size_t nc = fc.n - 2 * field_detail::core_lo(fc);
  const std::size_t nf = ff.n - 2 * field_detail::core_lo(ff);
  RefinementOrder r{0.0, 0.0, 0.0};
  for (std::size_t j = 0; j < nc; ++j)
    for (std::size_t i = 0; i < nc; ++i) {
      const double a = ec[j * nc + i], b = ef[2 * j * nf + 2 * i];
      if (std::isnan(a) || std::isnan(b)) continue;
      r.coarse_error = std::max(r.coarse_error, a);
      r.fine_error = std::max(r.fine_error, b);
    }
  r.order = std::log2(r.coarse_error / r.fine_error);
  return r;
}

/// int (|D^2 u|^2 - |grad|grad u||^2) phi^2 dgamma <= int |grad u|^2 |grad phi|^2 dgamma with the
/// radial quintic cutoff phi = cutoff(|x|, R). The left integrand is taken in its
/// sum-of-squares form on noncritical nodes; critical nodes are excluded.
inline PoincareReport poincare_inequality_check(const Potential& p, const Field2D& f, double R,
                                                double floor = kDefaultCriticalFloor) {
  (void)p;  // the identity is purely geometric; p documents which equation the field solves
  if (!(R > 0.0)) throw InvalidArgument("cutoff radius must be > 0");
  if (R + 1.0 > f.L - 1.0) throw InvalidArgument("cutoff support R + 1 must fit in the core |x| <= L - 1");
  PoincareReport r = sz_identity_check(f, floor);
  r.R = R;
  const bool next_fits = R + 2.0 <= f.L - 1.0;
  double lhs = 0.0, rhs = 0.0, rhs_next = 0.0, excluded = 0.0, measure = 0.0;
  const double cell = f.h * f.h;
  geometry_detail::for_each_core_node(f, [&](const geometry_detail::NodeGeometry& g) {
    const double w = cell * geometry_detail::gaussian_density(g.x, g.y);
    const double s = std::hypot(g.x, g.y);
    measure += w;
    const double dphi = cutoff_slope(s, R), dphi2 = cutoff_slope(s, R + 1.0);
    rhs += w * g.m * g.m * dphi * dphi;
    rhs_next += w * g.m * g.m * dphi2 * dphi2;
    if (g.m <= floor) {
      excluded += w * g.m;
      return;
    }
    const double phi = cutoff(s, R);
    lhs += w * g.sos * phi * phi;
  });
  r.lhs_integral = lhs;
  r.rhs_integral = rhs;
  if (next_fits) r.rhs_integral_next = rhs_next;
  r.excluded_gradient_integral = excluded;
  r.core_measure = measure;
  r.inequality_satisfied = lhs <= rhs + 1e-8;
  return r;
}

inline nlohmann::json to_json(const PoincareReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"R", num(r.R)},
          {"lhs_pointwise_max_error", num(r.lhs_pointwise_max_error)},
          {"lhs_integral", num(r.lhs_integral)},
          {"rhs_integral", num(r.rhs_integral)},
          {"rhs_integral_next", num(r.rhs_integral_next)},
          {"inequality_satisfied", r.inequality_satisfied},
          {"noncritical_fraction", num(r.noncritical_fraction)},
          {"min_D", num(r.min_D)},
          {"excluded_gradient_integral", num(r.excluded_gradient_integral)},
          {"core_measure", num(r.core_measure)}};
}

}  // namespace oulab
