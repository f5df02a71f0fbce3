#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <utility>

#include "oulab/errors.hpp"

namespace oulab::ode {

using State2 = std::array<double, 2>;

struct Tolerances {
  double rtol{1e-13};
  double atol{1e-15};
};

/// Adaptive Dormand-Prince 5(4) for a two-component first-order system.
/// `advance` integrates exactly to `t1` (either direction) and keeps the last
/// accepted step size as a hint for the next call.
template <class Rhs>
class Dopri5 {
 public:
  Dopri5(Rhs rhs, Tolerances tol) : rhs_(std::move(rhs)), tol_(tol) {}

  /// Returns false on step-size underflow.
  bool advance(double& t, State2& y, double t1) {
    const double dir = t1 >= t ? 1.0 : -1.0;
    double h = h_ > 0.0 ? h_ : std::min(1e-3, std::abs(t1 - t));
    while (dir * (t1 - t) > 0.0) {
      const double remaining = std::abs(t1 - t);
      const bool clipped = h >= remaining;
      const double hs = clipped ? remaining : h;
      if (hs < 1e-14 * std::max(1.0, std::abs(t))) return false;
      State2 ynew, err;
      step(t, y, dir * hs, ynew, err);
      double en = 0.0;
      for (int k = 0; k < 2; ++k) {
        const double sc = tol_.atol + tol_.rtol * std::max(std::abs(y[k]), std::abs(ynew[k]));
        en = std::max(en, std::abs(err[k]) / sc);
      }
      if (std::isfinite(en) && en <= 1.0) {
        t = clipped ? t1 : t + dir * hs;
        y = ynew;
        const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        h = clipped ? std::max(h, hs * fac) : hs * fac;
      } else {
        h = hs * (std::isfinite(en) ? std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9) : 0.1);
      }
    }
    h_ = h;
    return true;
  }

 private:
  void step(double t, const State2& y, double h, State2& out, State2& err) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    State2 k1, k2, k3, k4, k5, k6, k7, tmp;
    auto axpy = [&](std::initializer_list<std::pair<double, const State2*>> terms) {
      State2 r = y;
      for (auto [a, k] : terms)
        for (int i = 0; i < 2; ++i) r[i] += h * a * (*k)[i];
      return r;
    };
    k1 = rhs_(t, y);
    tmp = axpy({{a21, &k1}});
    k2 = rhs_(t + c2 * h, tmp);
    tmp = axpy({{a31, &k1}, {a32, &k2}});
    k3 = rhs_(t + c3 * h, tmp);
    tmp = axpy({{a41, &k1}, {a42, &k2}, {a43, &k3}});
    k4 = rhs_(t + c4 * h, tmp);
    tmp = axpy({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
    k5 = rhs_(t + c5 * h, tmp);
    tmp = axpy({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
    k6 = rhs_(t + h, tmp);
    out = axpy({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    k7 = rhs_(t + h, out);
    for (int i = 0; i < 2; ++i)
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
  }

  Rhs rhs_;
  Tolerances tol_;
  double h_{0.0};
};

template <class Rhs>
Dopri5<Rhs> make_dopri5(Rhs rhs, Tolerances tol = {}) {
  return Dopri5<Rhs>(std::move(rhs), tol);
}

}  // namespace oulab::ode
