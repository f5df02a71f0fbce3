#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oulab/errors.hpp"
#include "oulab/quadrature.hpp"

namespace oulab {

using RealFn = std::function<double(double)>;

/// Flags for the symmetric double-well hypotheses used by the existence theory:
/// F(+-c) = 0, F > 0 elsewhere, F even, and f vanishing exactly at {-c, 0, c}.
struct WellHypotheses {
  bool wells_vanish{false};
  bool positive_elsewhere{false};
  bool even{false};
  bool zero_structure{false};

  bool all() const noexcept { return wells_vanish && positive_elsewhere && even && zero_structure; }
};

/// Nonlinearity f, potential F with F' = -f, and f'.
///
/// The callables must be pure; a Potential is immutable after construction and
/// can be shared between threads.
class Potential {
 public:
  Potential(std::string name, RealFn F, RealFn f, RealFn fprime, std::optional<double> c, double k,
            std::vector<double> zeros, WellHypotheses flags)
      : name_(std::move(name)),
        F_(std::move(F)),
        f_(std::move(f)),
        fprime_(std::move(fprime)),
        c_(c),
        k_(k),
        zeros_(std::move(zeros)),
        flags_(flags) {}

  double F(double t) const { return F_(t); }
  double f(double t) const { return f_(t); }
  double fprime(double t) const { return fprime_(t); }

  const std::string& name() const noexcept { return name_; }
  bool has_well() const noexcept { return c_.has_value(); }
  /// Well location; throws if the potential was built without one.
  double c() const {
    if (!c_) throw InvalidArgument("potential '" + name_ + "' has no declared well location");
    return *c_;
  }
  double k() const noexcept { return k_; }
  const std::vector<double>& zeros_of_f() const noexcept { return zeros_; }
  const WellHypotheses& hypotheses() const noexcept { return flags_; }

 private:
  std::string name_;
  RealFn F_, f_, fprime_;
  std::optional<double> c_;
  double k_;
  std::vector<double> zeros_;
  WellHypotheses flags_;
};

namespace potential {

inline constexpr std::size_t kProbePoints = 257;
inline constexpr double kProbeStepCoarse = 1e-3;
inline constexpr double kProbeStepFine = 5e-4;
inline constexpr std::size_t kSignScanPoints = 4096;
inline constexpr double kSignMargin = 1e-12;

inline std::vector<double> probe_grid(std::optional<double> c) {
  const double reach = 2.0 * (c ? *c : 1.0);
  std::vector<double> g(kProbePoints);
  for (std::size_t i = 0; i < kProbePoints; ++i)
    g[i] = -reach + 2.0 * reach * static_cast<double>(i) / static_cast<double>(kProbePoints - 1);
  return g;
}

namespace detail {

// Central-difference consistency of `deriv` against -d/dt `prim` (sign = -1) or
// +d/dt (sign = +1). Accepts a point when the defect is at rounding level or
// shrinks at observed order >= 1.8 under h-halving.
inline void check_derivative_pair(const RealFn& prim, const RealFn& deriv, double sign,
                                  const std::vector<double>& grid, const char* label) {
  const double min_ratio = std::pow(2.0, 1.8);
  for (double t : grid) {
    auto defect = [&](double h) {
      const double d = (prim(t + h) - prim(t - h)) / (2.0 * h);
      return std::abs(deriv(t) - sign * d);
    };
    const double e1 = defect(kProbeStepCoarse);
    const double e2 = defect(kProbeStepFine);
    const double scale = 1.0 + std::abs(prim(t)) + std::abs(deriv(t));
    if (!std::isfinite(e1) || !std::isfinite(e2))
      throw ModelInconsistencyError(std::string(label) + ": non-finite value", t);
    if (e2 <= 1e-9 * scale) continue;
    if (e1 / e2 >= min_ratio && e2 <= 1e-3 * scale) continue;
    throw ModelInconsistencyError(std::string(label) + ": finite-difference mismatch", t);
  }
}

inline std::vector<double> locate_zeros(const RealFn& f, const std::vector<double>& grid,
                                        const std::vector<double>& known) {
  std::vector<double> zeros = known;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    double a = grid[i], b = grid[i + 1];
    double fa = f(a), fb = f(b);
    if (fa == 0.0) zeros.push_back(a);
    if (fa * fb < 0.0) {
      for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      zeros.push_back(0.5 * (a + b));
    }
  }
  if (!grid.empty() && f(grid.back()) == 0.0) zeros.push_back(grid.back());
  std::sort(zeros.begin(), zeros.end());
  std::vector<double> unique;
  for (double z : zeros)
    if (unique.empty() || std::abs(z - unique.back()) > 1e-9) unique.push_back(z);
  return unique;
}

inline WellHypotheses check_hypotheses(const RealFn& F, const RealFn& f, std::optional<double> c,
                                       const std::vector<double>& grid) {
  WellHypotheses h;
  if (!c || !(*c > 0.0)) return h;
  const double cc = *c;
  const double tol = 1e-12;
  h.wells_vanish = std::abs(F(cc)) <= tol && std::abs(F(-cc)) <= tol;

  h.positive_elsewhere = true;
  h.even = true;
  for (double r : grid) {
    if (std::abs(std::abs(r) - cc) > 1e-9 && !(F(r) > 0.0)) h.positive_elsewhere = false;
    if (std::abs(F(r) - F(-r)) > tol * (1.0 + std::abs(F(r)))) h.even = false;
  }

  const double special[] = {-cc, 0.0, cc};
  h.zero_structure = true;
  for (double s : special)
    if (std::abs(f(s)) > tol) h.zero_structure = false;
  auto near_special = [&](double r) {
    return std::any_of(std::begin(special), std::end(special),
                       [&](double s) { return std::abs(r - s) <= 1e-9; });
  };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid[i];
    if (!near_special(r) && f(r) == 0.0) h.zero_structure = false;
    if (i + 1 < grid.size()) {
      const double a = grid[i], b = grid[i + 1];
      const bool crosses_special = std::any_of(std::begin(special), std::end(special),
                                               [&](double s) { return s >= a - 1e-9 && s <= b + 1e-9; });
      if (!crosses_special && f(a) * f(b) < 0.0) h.zero_structure = false;
    }
  }
  return h;
}

}  // namespace detail

/// F_A(t) = A (1 - t^2)^2 / 4, f_A(t) = A (t - t^3), wells at +-1.
inline Potential double_well(double A) {
  if (!(A > 0.0) || !std::isfinite(A)) throw InvalidArgument("double_well amplitude must be > 0");
  auto F = [A](double t) {
    const double s = 1.0 - t * t;
    return A * s * s / 4.0;
  };
  auto f = [A](double t) { return A * (t - t * t * t); };
  auto fp = [A](double t) { return A * (1.0 - 3.0 * t * t); };
  WellHypotheses flags{true, true, true, true};
  return Potential("double_well", F, f, fp, 1.0, A / 4.0, {-1.0, 0.0, 1.0}, flags);
}

/// Validates (F, f, f') by finite differences and records the well hypotheses as flags.
inline Potential custom(RealFn F, RealFn f, RealFn fprime, std::optional<double> c,
                        std::string name = "custom") {
  if (c && !(*c > 0.0)) throw InvalidArgument("well location c must be > 0");
  const auto grid = probe_grid(c);
  detail::check_derivative_pair(F, f, -1.0, grid, "f != -F'");
  detail::check_derivative_pair(f, fprime, +1.0, grid, "fprime != f'");
  const auto flags = detail::check_hypotheses(F, f, c, grid);
  std::vector<double> known;
  if (flags.zero_structure) known = {-*c, 0.0, *c};
  auto zeros = detail::locate_zeros(f, grid, known);
  const double k = F(0.0);
  return Potential(std::move(name), std::move(F), std::move(f), std::move(fprime), c, k,
                   std::move(zeros), flags);
}

/// F given by ascending polynomial coefficients, F(t) = sum a_j t^j.
inline Potential polynomial(std::vector<double> coeffs, std::optional<double> c) {
  if (coeffs.empty()) throw InvalidArgument("polynomial potential needs at least one coefficient");
  auto eval = [](const std::vector<double>& a, double t) {
    double s = 0.0;
    for (auto it = a.rbegin(); it != a.rend(); ++it) s = s * t + *it;
    return s;
  };
  std::vector<double> d1, d2;
  for (std::size_t j = 1; j < coeffs.size(); ++j) d1.push_back(static_cast<double>(j) * coeffs[j]);
  for (std::size_t j = 1; j < d1.size(); ++j) d2.push_back(static_cast<double>(j) * d1[j]);
  auto F = [coeffs, eval](double t) { return eval(coeffs, t); };
  auto f = [d1, eval](double t) { return -eval(d1, t); };
  auto fp = [d2, eval](double t) { return -eval(d2, t); };
  return custom(F, f, fp, c, "polynomial");
}

/// Sign-flipped double well: F = -A (1 - t^2)^2 / 4, f = A (t^3 - t).
inline Potential inverted_double_well(double A) {
  if (!(A > 0.0)) throw InvalidArgument("inverted_double_well amplitude must be > 0");
  auto F = [A](double t) {
    const double s = 1.0 - t * t;
    return -A * s * s / 4.0;
  };
  auto f = [A](double t) { return A * (t * t * t - t); };
  auto fp = [A](double t) { return A * (3.0 * t * t - 1.0); };
  return custom(F, f, fp, 1.0, "inverted_double_well");
}

}  // namespace potential

// ----------------------------------------------------------------------------
// Existence / nonexistence screening

enum class ExistenceVerdict { nonexistence_proved, sufficient_condition_met, inconclusive };

inline const char* to_string(ExistenceVerdict v) {
  switch (v) {
    case ExistenceVerdict::nonexistence_proved: return "nonexistence-proved";
    case ExistenceVerdict::sufficient_condition_met: return "sufficient-condition-met";
    case ExistenceVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct Interval {
  double lo, hi;
};

struct ExistenceReport {
  double lhs_remark{0.0};  ///< int_0^c sqrt(2 F(r)) dr
  double rhs_remark{0.0};  ///< sqrt(pi/2) F(0), i.e. G(0)
  bool remark_satisfied{false};
  std::optional<Interval> blocking_interval;  ///< one-sided sign interval for f
  ExistenceVerdict verdict{ExistenceVerdict::inconclusive};
};

struct ScreenOptions {
  std::size_t scan_points{potential::kSignScanPoints};
  double margin{potential::kSignMargin};
};

/// Screens a candidate connection U- -> U+ for the one-sided sign obstruction on f
/// and evaluates the closed-form sufficient condition for G(U) < G(0).
///
/// F is clamped at zero inside the square root, so potentials with F < 0 on
/// [0, c] report lhs over the positive part only.
inline ExistenceReport existence_screen(const Potential& p, double Uminus, double Uplus,
                                        const ScreenOptions& opt = {}) {
  if (!(Uminus < Uplus)) throw InvalidArgument("existence_screen requires U- < U+");
  if (std::abs(p.f(Uminus)) > 1e-10 || std::abs(p.f(Uplus)) > 1e-10)
    throw InvalidArgument("limits of a monotone connection must satisfy f(U-) = f(U+) = 0");
  if (opt.scan_points < 2) throw InvalidArgument("sign scan needs at least two points");

  std::vector<double> grid(opt.scan_points);
  for (std::size_t i = 0; i < opt.scan_points; ++i)
    grid[i] = Uminus + (Uplus - Uminus) * static_cast<double>(i) / static_cast<double>(opt.scan_points - 1);
  for (double z : p.zeros_of_f())
    if (z > Uminus && z < Uplus) grid.push_back(z);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  ExistenceReport rep;
  const std::size_t n = grid.size();
  // f <= 0 on [U0, U+]: smallest interior U0 such that every later sample is <= margin.
  {
    std::size_t first = n;
    for (std::size_t i = n; i-- > 0;) {
      if (p.f(grid[i]) <= opt.margin) first = i;
      else break;
    }
    if (first < n) {
      const std::size_t i0 = std::max<std::size_t>(first, 1);
      if (i0 + 1 < n) rep.blocking_interval = Interval{grid[i0], Uplus};
    }
  }
  // f >= 0 on [U-, U0]: largest interior U0 such that every earlier sample is >= -margin.
  if (!rep.blocking_interval) {
    std::size_t last = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (p.f(grid[i]) >= -opt.margin) last = i;
      else break;
    }
    if (last < n) {
      const std::size_t i0 = std::min(last, n - 2);
      if (i0 >= 1) rep.blocking_interval = Interval{Uminus, grid[i0]};
    }
  }

  const double c = p.has_well() ? p.c() : Uplus;
  const auto lebesgue = quadrature::interval_rule(0.0, c, 64);
  rep.lhs_remark = integrate(lebesgue, [&](double r) { return std::sqrt(2.0 * std::max(p.F(r), 0.0)); });
  const auto half = quadrature::cached_rule(RuleKind::half_line_unnormalized,
                                            quadrature::kDefaultHalfLinePanels);
  const double F0 = p.F(0.0);
  rep.rhs_remark = integrate(*half, [F0](double) { return F0; });
  rep.remark_satisfied = rep.lhs_remark <= rep.rhs_remark;

  if (rep.blocking_interval) rep.verdict = ExistenceVerdict::nonexistence_proved;
  else if (rep.remark_satisfied) rep.verdict = ExistenceVerdict::sufficient_condition_met;
  else rep.verdict = ExistenceVerdict::inconclusive;
  return rep;
}

/// Amplitude A* at which the double-well family meets the sufficient condition
/// with equality: sqrt(A/2) * 2/3 = sqrt(pi/2) * A/4, i.e. A* = 64 / (9 pi).
inline double remark_threshold() { return 64.0 / (9.0 * std::numbers::pi); }

}  // namespace oulab
