#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "oulab/errors.hpp"
#include "oulab/ode.hpp"
#include "oulab/potential.hpp"
#include "oulab/profile.hpp"

namespace oulab {

// Heteroclinic profiles of U'' - t U' + f(U) = 0, odd, increasing from -c to c.

enum class ShootStatus { converged, nonexistence, max_iter };
enum class TrialOutcome { overshoot, undershoot };

inline const char* to_string(ShootStatus s) {
  switch (s) {
    case ShootStatus::converged: return "converged";
    case ShootStatus::nonexistence: return "nonexistence";
    case ShootStatus::max_iter: return "max-iter";
  }
  return "?";
}

inline const char* to_string(TrialOutcome o) {
  return o == TrialOutcome::overshoot ? "overshoot" : "undershoot";
}

struct TrialRecord {
  double slope;
  TrialOutcome outcome;
  double t_event;  ///< grid time at which the outcome was decided
};

/// Forward trajectory sampled on the shooting grid up to the classifying event.
struct Trajectory {
  double slope{0.0};
  TrialOutcome outcome{TrialOutcome::overshoot};
  std::vector<double> t, U, V;
};

struct ShootOptions {
  std::size_t grid_n{2048};
  double tail_tol{1e-5};
  double residual_tol{1e-8};
  double slope_lo{1e-8};
  double slope_hi{1e3};
  std::size_t scan_points{133};  ///< log-spaced slopes, 12 per decade over the default bracket
  int max_bisections{200};
  /// Forward trajectories from the two bracket ends are trusted while they agree to this level.
  double trust_tol{1e-12};
  ode::Tolerances integrator{1e-13, 1e-15};
  bool log_trajectories{false};
};

struct ShootResult {
  ShootStatus status{ShootStatus::nonexistence};
  std::optional<Profile1D> profile;
  double shooting_slope{std::numeric_limits<double>::quiet_NaN()};
  Interval bracket{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  std::vector<TrialRecord> classifier_trace;
  std::vector<Trajectory> trajectories;
  /// Grid time where the forward solution hands over to the backward-integrated tail.
  double splice_point{std::numeric_limits<double>::quiet_NaN()};
};

namespace heteroclinic_detail {

inline auto make_rhs(const Potential& p) {
  return [&p](double t, const ode::State2& y) -> ode::State2 { return {y[1], t * y[1] - p.f(y[0])}; };
}

// Integrates from (0, s) along the grid until the trajectory classifies itself:
// overshoot once U > c, undershoot once U' <= 0. Trajectories that are still
// undecided after three times the grid length count as undershoot.
inline Trajectory run_trial(const Potential& p, double c, double s, double h, std::size_t n,
                            const ode::Tolerances& tol) {
  Trajectory tr;
  tr.slope = s;
  auto stepper = ode::make_dopri5(make_rhs(p), tol);
  double t = 0.0;
  ode::State2 y{0.0, s};
  tr.t.push_back(0.0);
  tr.U.push_back(0.0);
  tr.V.push_back(s);
  const std::size_t n_max = 3 * n;
  for (std::size_t i = 1; i <= n_max; ++i) {
    const double t1 = h * static_cast<double>(i);
    if (!stepper.advance(t, y, t1)) throw NumericalStiffnessError("step size underflow", s);
    tr.t.push_back(t1);
    tr.U.push_back(y[0]);
    tr.V.push_back(y[1]);
    if (y[0] > c) {
      tr.outcome = TrialOutcome::overshoot;
      return tr;
    }
    if (y[1] <= 0.0) {
      tr.outcome = TrialOutcome::undershoot;
      return tr;
    }
  }
  tr.outcome = TrialOutcome::undershoot;
  return tr;
}

// f(c - w) for the deviation w = c - U. Near the well a cubic Taylor expansion
// (derivatives of f' by central differences) keeps full relative precision in w.
class WellDeviationForce {
 public:
  WellDeviationForce(const Potential& p, double c) : p_(&p), c_(c) {
    const double e = 1e-4;
    d1_ = p.fprime(c);
    d2_ = (p.fprime(c + e) - p.fprime(c - e)) / (2.0 * e);
    const double e3 = 1e-3;
    d3_ = (p.fprime(c + e3) - 2.0 * d1_ + p.fprime(c - e3)) / (e3 * e3);
  }
  double operator()(double w) const {
    if (std::abs(w) < 1e-3) return w * (-d1_ + w * (0.5 * d2_ - w * d3_ / 6.0));
    return p_->f(c_ - w);
  }

 private:
  const Potential* p_;
  double c_, d1_, d2_, d3_;
};

// Integrates w = c - U backward from T with the decaying-branch closure
// U'(T) = f'(c)/T (U(T) - c), w(T) = delta, recording U, U' on grid nodes stop..n.
inline void backward_tail(const Potential& p, double c, double delta, double h, std::size_t n,
                          std::size_t stop, const ode::Tolerances& tol, std::vector<double>& W,
                          std::vector<double>& V) {
  const double T = h * static_cast<double>(n);
  const double slope_coeff = p.fprime(c) / T;
  const WellDeviationForce force(p, c);
  auto rhs = [&force](double t, const ode::State2& y) -> ode::State2 {
    return {y[1], t * y[1] + force(y[0])};
  };
  auto stepper = ode::make_dopri5(rhs, ode::Tolerances{tol.rtol, 1e-300});
  double t = T;
  ode::State2 y{delta, slope_coeff * delta};  // w' = -U' = f'(c)/T * w
  W.assign(n + 1, 0.0);
  V.assign(n + 1, 0.0);
  W[n] = y[0];
  V[n] = -y[1];
  for (std::size_t i = n; i-- > stop;) {
    const double t1 = h * static_cast<double>(i);
    if (!stepper.advance(t, y, t1)) throw NumericalStiffnessError("step size underflow in tail", delta);
    W[i] = y[0];
    V[i] = -y[1];
  }
}

}  // namespace heteroclinic_detail

/// Shooting on the initial slope U'(0) = s with U(0) = 0.
///
/// A log-spaced scan classifies the whole initial bracket; bisection then
/// narrows the largest undershoot / smallest overshoot pair to machine
/// resolution. Undershoot is terminal: once U' <= 0 in a region where f(U) <= 0,
/// U'' >= t U' forces U' to stay negative, so the trajectory can never become a
/// bounded increasing profile. Forward integration is unstable beyond a few
/// units of t (the e^{t^2/2} mode), so the profile is completed by integrating
/// the decaying branch backward from T and matching U at the last trusted node.
inline ShootResult shoot(const Potential& p, double T, const ShootOptions& opt = {}) {
  if (!(T >= 6.0)) throw InvalidArgument("shoot requires T >= 6");
  if (!(opt.tail_tol > 0.0) || !(opt.residual_tol > 0.0)) throw InvalidArgument("tolerances must be > 0");
  if (opt.grid_n < 16) throw InvalidArgument("shooting grid too small");
  if (!(opt.slope_lo > 0.0 && opt.slope_hi > opt.slope_lo)) throw InvalidArgument("bad slope bracket");
  if (opt.scan_points < 2) throw InvalidArgument("slope scan needs at least two points");
  const double c = p.c();
  const std::size_t n = opt.grid_n;
  const double h = T / static_cast<double>(n);

  ShootResult res;
  auto record = [&](const Trajectory& tr) {
    res.classifier_trace.push_back({tr.slope, tr.outcome, tr.t.back()});
    if (opt.log_trajectories) res.trajectories.push_back(tr);
  };

  std::vector<Trajectory> scan;
  scan.reserve(opt.scan_points);
  const double ratio = std::log(opt.slope_hi / opt.slope_lo);
  for (std::size_t k = 0; k < opt.scan_points; ++k) {
    const double s = k + 1 == opt.scan_points
                         ? opt.slope_hi
                         : opt.slope_lo * std::exp(ratio * static_cast<double>(k) /
                                                   static_cast<double>(opt.scan_points - 1));
    scan.push_back(heteroclinic_detail::run_trial(p, c, s, h, n, opt.integrator));
    record(scan.back());
  }

  std::optional<std::size_t> last_under;
  for (std::size_t k = 0; k < scan.size(); ++k)
    if (scan[k].outcome == TrialOutcome::undershoot) last_under = k;
  if (!last_under || *last_under + 1 >= scan.size()) {
    res.status = ShootStatus::nonexistence;
    res.bracket = {opt.slope_lo, opt.slope_hi};
    return res;
  }

  Trajectory lo = std::move(scan[*last_under]);
  Trajectory hi = std::move(scan[*last_under + 1]);
  scan.clear();
  bool resolved = false;
  for (int it = 0; it < opt.max_bisections; ++it) {
    const double mid = 0.5 * (lo.slope + hi.slope);
    if (!(mid > lo.slope && mid < hi.slope)) {
      resolved = true;
      break;
    }
    auto tr = heteroclinic_detail::run_trial(p, c, mid, h, n, opt.integrator);
    record(tr);
    if (tr.outcome == TrialOutcome::undershoot) lo = std::move(tr);
    else hi = std::move(tr);
  }
  res.bracket = {lo.slope, hi.slope};
  res.shooting_slope = 0.5 * (lo.slope + hi.slope);
  if (!resolved) {
    res.status = ShootStatus::max_iter;
    return res;
  }

  // Trusted prefix: both bracket trajectories agree and are still increasing below c.
  const std::size_t m = std::min({lo.U.size(), hi.U.size(), n + 1});
  std::size_t trust = 0;
  for (std::size_t i = 1; i < m; ++i) {
    const bool agree = std::abs(lo.U[i] - hi.U[i]) <= opt.trust_tol &&
                       std::abs(lo.V[i] - hi.V[i]) <= opt.trust_tol * std::max(1.0, std::abs(lo.V[i]));
    if (!agree || !(lo.V[i] > 0.0) || !(hi.V[i] > 0.0) || !(hi.U[i] < c)) break;
    trust = i;
  }

  Profile1D prof;
  prof.c = c;
  prof.grid = uniform_grid(0.0, T, n);
  prof.values.assign(n + 1, 0.0);
  prof.derivative.assign(n + 1, 0.0);
  for (std::size_t i = 0; i <= trust; ++i) {
    prof.values[i] = 0.5 * (lo.U[i] + hi.U[i]);
    prof.derivative[i] = 0.5 * (lo.V[i] + hi.V[i]);
  }
  if (trust < n) {
    // Match the backward tail to U at the splice node; w_tail(t*) increases with delta.
    const double target = c - prof.values[trust];
    std::vector<double> tw, tv;
    auto mismatch = [&](double delta) {
      heteroclinic_detail::backward_tail(p, c, delta, h, n, trust, opt.integrator, tw, tv);
      return tw[trust] - target;
    };
    double a = 0.0, b = target;
    double ga = -target, gb = mismatch(b);
    for (int it = 0; it < 200 && std::abs(b - a) > 1e-15 * std::abs(b); ++it) {
      // Anderson-Bjorck regula falsi
      const double x = b - gb * (b - a) / (gb - ga);
      const double gx = mismatch(x);
      if (gx == 0.0) {
        b = x;
        break;
      }
      if ((gx > 0.0) == (gb > 0.0)) {
        const double mfac = 1.0 - gx / gb;
        ga *= mfac > 0.0 ? mfac : 0.5;
      } else {
        a = b;
        ga = gb;
      }
      b = x;
      gb = gx;
      if (std::abs(gx) <= 1e-17 * std::max(target, 1e-300)) break;
    }
    mismatch(b);
    for (std::size_t i = trust + 1; i <= n; ++i) {
      prof.values[i] = c - tw[i];
      prof.derivative[i] = tv[i];
    }
  }
  res.splice_point = prof.grid[trust];

  prof.residual = hermite_ode_residual(prof, p);
  prof.residual_sup = sup_abs(prof.residual);
  prof.monotone = strictly_increasing_interior(prof);
  const double tail_gap = std::abs(prof.values[n] - c);
  res.status = (prof.monotone && tail_gap <= opt.tail_tol && prof.residual_sup <= opt.residual_tol)
                   ? ShootStatus::converged
                   : ShootStatus::max_iter;
  res.profile = std::move(prof);
  return res;
}

/// Worst ratio U'(t) / (U'(t0) e^{(t^2 - t0^2)/2}) over t0 < t while the trajectory
/// stays in [0, c] (1 means the exponential lower bound holds with equality somewhere).
/// Where f <= 0 along the path, U'' >= t U' forces this to be >= 1; the point stored
/// after an overshoot lies beyond c and is not part of that claim.
inline double growth_ratio(const Trajectory& tr, double c) {
  double best = std::numeric_limits<double>::infinity();
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tr.t.size() && tr.U[i] <= c; ++i) {
    // r(t) = U'(t) e^{-t^2/2} must be nondecreasing
    const double r = tr.V[i] * std::exp(-0.5 * tr.t[i] * tr.t[i]);
    if (i > 0 && peak > 0.0) best = std::min(best, r / peak);
    peak = std::max(peak, r);
  }
  return best;
}

// ----------------------------------------------------------------------------
// Collocation refinement

struct CollocationOptions {
  std::size_t n{2048};
  double tol{1e-8};
  int max_iter{50};
  int divergence_window{5};
};

struct Collocation {
  Profile1D profile;
  std::vector<double> newton_residuals;  ///< sup-norm residual before each Newton step and at exit
};

/// Newton failed to reach the tolerance; carries the best iterate.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, Profile1D best) : Error(what), best_(std::move(best)) {}
  const Profile1D& best() const noexcept { return best_; }

 private:
  Profile1D best_;
};

/// Newton on the second-order finite-difference BVP on [0, T]: U(0) taken from
/// the seed (0 for odd profiles) and the Robin closure U'(T) = f'(c)/T (U(T) - c)
/// imposed through a ghost node.
inline Collocation collocate(const Potential& p, const Profile1D& seed, double T,
                             const CollocationOptions& opt = {}) {
  if (!seed.half_line()) throw InvalidArgument("collocate expects a half-line seed");
  if (!(T > 0.0) || opt.n < 4) throw InvalidArgument("collocate needs T > 0 and n >= 4");
  if (!(opt.tol > 0.0)) throw InvalidArgument("tolerance must be > 0");
  const double c = p.c();
  const std::size_t n = opt.n;
  const auto grid = uniform_grid(0.0, T, n);
  const double h = T / static_cast<double>(n);
  const double h2 = h * h;
  const double robin = p.fprime(c) / T;

  std::vector<double> U(n + 1);
  ProfileEvaluator seed_eval(seed);
  for (std::size_t i = 0; i <= n; ++i) U[i] = seed_eval.value(grid[i]);
  U[0] = seed.values.front();

  std::vector<double> R(n + 1, 0.0), sub(n + 1), diag(n + 1), sup(n + 1), delta(n + 1);
  auto residual = [&](const std::vector<double>& u, std::vector<double>& r) {
    r[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i)
      r[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2 - grid[i] * (u[i + 1] - u[i - 1]) / (2.0 * h) + p.f(u[i]);
    const double g = robin * (u[n] - c);
    r[n] = (2.0 * u[n - 1] + 2.0 * h * g - 2.0 * u[n]) / h2 - T * g + p.f(u[n]);
    return sup_abs(r);
  };

  Collocation out;
  double norm = residual(U, R);
  std::vector<double> best = U;
  double best_norm = norm;
  int increases = 0, polish = 0;
  for (int it = 0;; ++it) {
    out.newton_residuals.push_back(norm);
    if (!std::isfinite(norm)) break;
    if (norm <= opt.tol) {
      // A couple of extra steps while they still pay off (quadratic tail).
      const std::size_t k = out.newton_residuals.size();
      const bool improving = k < 2 || out.newton_residuals[k - 1] < 0.5 * out.newton_residuals[k - 2];
      if (polish >= 2 || !improving) break;
      ++polish;
    }
    if (it >= opt.max_iter) break;
    for (std::size_t i = 1; i < n; ++i) {
      sub[i] = 1.0 / h2 + grid[i] / (2.0 * h);
      diag[i] = -2.0 / h2 + p.fprime(U[i]);
      sup[i] = 1.0 / h2 - grid[i] / (2.0 * h);
    }
    sub[n] = 2.0 / h2;
    diag[n] = 2.0 * robin / h - 2.0 / h2 - T * robin + p.fprime(U[n]);
    // Thomas algorithm on rows 1..n.
    std::vector<double> cp(n + 1, 0.0), dp(n + 1, 0.0);
    cp[1] = sup[1] / diag[1];
    dp[1] = -R[1] / diag[1];
    for (std::size_t i = 2; i <= n; ++i) {
      const double denom = diag[i] - sub[i] * cp[i - 1];
      cp[i] = i < n ? sup[i] / denom : 0.0;
      dp[i] = (-R[i] - sub[i] * dp[i - 1]) / denom;
    }
    delta[n] = dp[n];
    for (std::size_t i = n - 1; i >= 1; --i) delta[i] = dp[i] - cp[i] * delta[i + 1];
    for (std::size_t i = 1; i <= n; ++i) U[i] += delta[i];

    const double prev = norm;
    norm = residual(U, R);
    if (norm < best_norm) {
      best_norm = norm;
      best = U;
    }
    increases = (norm > prev) ? increases + 1 : 0;
    if (increases >= opt.divergence_window) break;
  }

  auto build = [&](const std::vector<double>& u) {
    Profile1D prof;
    prof.c = c;
    prof.grid = grid;
    prof.values = u;
    prof.derivative = fd_derivative(grid, u);
    prof.derivative[n] = robin * (u[n] - c);
    std::vector<double> r(n + 1);
    residual(u, r);
    prof.residual = r;
    prof.residual_sup = sup_abs(r);
    prof.monotone = strictly_increasing_interior(prof);
    return prof;
  };

  if (!(best_norm <= opt.tol))
    throw NoConvergenceError("collocation Newton did not reach tolerance (best residual " +
                                 std::to_string(best_norm) + ")",
                             build(best));
  out.profile = build(best);
  return out;
}

/// (|U(T) - c|, |f(U(T))|) at the end of the profile grid.
inline std::pair<double, double> limits_check(const Profile1D& prof, const Potential& p) {
  const double uT = prof.values.back();
  return {std::abs(uT - prof.c), std::abs(p.f(uT))};
}

}  // namespace oulab
