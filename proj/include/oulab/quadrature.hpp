#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "oulab/errors.hpp"

namespace oulab {

/// Weight a rule integrates against.
///  - full_line_normalized:   e^{-t^2/2} / sqrt(2 pi) dt on R (total mass 1)
///  - half_line_unnormalized: e^{-t^2/2} dt on (0, inf) (total mass sqrt(pi/2))
///  - interval_lebesgue:      dt on a bounded interval [a, b]
enum class RuleKind { full_line_normalized, half_line_unnormalized, interval_lebesgue };

struct QuadratureRule {
  RuleKind kind{RuleKind::full_line_normalized};
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t order() const noexcept { return nodes.size(); }
  double total_mass() const noexcept {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

namespace quadrature {

inline constexpr std::size_t kDefaultFullLineOrder = 64;
inline constexpr std::size_t kDefaultHalfLinePanels = 400;
/// Beyond ~320 nodes the outermost Gauss-Hermite weights underflow double precision.
inline constexpr std::size_t kMaxFullLineOrder = 320;
inline constexpr std::size_t kMaxHalfLinePanels = 100000;
inline constexpr double kHalfLineTruncation = 12.0;
inline constexpr std::size_t kPanelPoints = 8;

/// Gauss-Legendre nodes/weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(std::size_t m) {
  std::vector<double> x(m), w(m);
  for (std::size_t i = 0; i < (m + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(m) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (std::size_t k = 1; k <= m; ++k) {
        const double p2 = p1;
        p1 = p0;
        const double kk = static_cast<double>(k);
        p0 = ((2.0 * kk - 1.0) * z * p1 - (kk - 1.0) * p2) / kk;
      }
      dp = static_cast<double>(m) * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[m - 1 - i] = z;
    w[i] = w[m - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

namespace detail {

// Orthonormal probabilists' Hermite recurrence at x, returning psi_n(x)/psi_{n-1}(x)
// and log|psi_{n-1}(x)|. Rescales on the fly so large |x| never overflows.
struct HermiteTail {
  double ratio;        // psi_n / psi_{n-1}
  double log_abs_prev; // log |psi_{n-1}|
};

inline HermiteTail hermite_tail(std::size_t n, double x) {
  double prev = 0.0, cur = 1.0, log_scale = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double kk = static_cast<double>(k);
    const double next = (x * cur - std::sqrt(kk) * prev) / std::sqrt(kk + 1.0);
    prev = cur;
    cur = next;
    if (std::abs(cur) > 1e150) {
      cur *= 1e-150;
      prev *= 1e-150;
      log_scale += 150.0 * std::log(10.0);
    }
  }
  // cur = psi_{n-1}, prev = psi_{n-2}
  const double nn = static_cast<double>(n - 1);
  const double psi_n = (x * cur - std::sqrt(nn) * prev) / std::sqrt(nn + 1.0);
  return {psi_n / cur, std::log(std::abs(cur)) + log_scale};
}

inline QuadratureRule build_full_line(std::size_t n) {
  QuadratureRule rule;
  rule.kind = RuleKind::full_line_normalized;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  if (n == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = 1.0;
    return rule;
  }
  // Golub-Welsch: eigenvalues of the Jacobi matrix of He_k (zero diagonal, sqrt(k) off-diagonal).
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd sub(static_cast<Eigen::Index>(n - 1));
  for (std::size_t k = 1; k < n; ++k) sub[static_cast<Eigen::Index>(k - 1)] = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double x = ev[static_cast<Eigen::Index>(i)];
    // Newton polish on psi_n, using psi_n' = sqrt(n) psi_{n-1}.
    for (int it = 0; it < 4; ++it) {
      const auto t = hermite_tail(n, x);
      const double dx = t.ratio / sqrt_n;
      x -= dx;
      if (std::abs(dx) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    rule.nodes[i] = x;
    // Christoffel-Darboux at a zero of psi_n: sum_{k<n} psi_k^2 = n psi_{n-1}^2.
    const auto t = hermite_tail(n, x);
    rule.weights[i] = std::exp(-std::log(static_cast<double>(n)) - 2.0 * t.log_abs_prev);
  }
  // Enforce exact reflection symmetry.
  for (std::size_t i = 0; i < n / 2; ++i) {
    const std::size_t j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  // Normalize to total mass 1 (removes the last ulps of drift).
  const double mass = rule.total_mass();
  for (double& w : rule.weights) w /= mass;
  return rule;
}

inline QuadratureRule build_half_line(std::size_t panels) {
  QuadratureRule rule;
  rule.kind = RuleKind::half_line_unnormalized;
  const auto [gx, gw] = gauss_legendre(kPanelPoints);
  // tanh-mapped breakpoints: dense near t = 0, coarse towards the truncation point.
  constexpr double kappa = 2.0;
  const double T = kHalfLineTruncation;
  auto breakpoint = [&](std::size_t j) {
    const double s = static_cast<double>(j) / static_cast<double>(panels);
    return T * (1.0 - std::tanh(kappa * (1.0 - s)) / std::tanh(kappa));
  };
  rule.nodes.reserve(panels * kPanelPoints);
  rule.weights.reserve(panels * kPanelPoints);
  for (std::size_t j = 0; j < panels; ++j) {
    const double a = breakpoint(j), b = breakpoint(j + 1);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t q = 0; q < kPanelPoints; ++q) {
      const double t = mid + half * gx[q];
      rule.nodes.push_back(t);
      rule.weights.push_back(half * gw[q] * std::exp(-0.5 * t * t));
    }
  }
  return rule;
}

}  // namespace detail

/// Builds a Gaussian rule. For the full line `n` is the node count; for the half
/// line it is the number of composite Gauss-Legendre panels on [0, 12].
inline QuadratureRule build_rule(RuleKind kind, std::size_t n) {
  if (n == 0) throw InvalidArgument("quadrature order must be >= 1");
  switch (kind) {
    case RuleKind::full_line_normalized:
      if (n > kMaxFullLineOrder)
        throw InvalidArgument("full-line order " + std::to_string(n) + " exceeds maximum " +
                              std::to_string(kMaxFullLineOrder));
      return detail::build_full_line(n);
    case RuleKind::half_line_unnormalized:
      if (n > kMaxHalfLinePanels)
        throw InvalidArgument("half-line panel count " + std::to_string(n) + " exceeds maximum");
      return detail::build_half_line(n);
    case RuleKind::interval_lebesgue:
      break;
  }
  throw InvalidArgument("use interval_rule() for Lebesgue rules on an interval");
}

/// Composite Gauss-Legendre rule for plain dt on [a, b].
inline QuadratureRule interval_rule(double a, double b, std::size_t panels = 64) {
  if (panels == 0) throw InvalidArgument("panel count must be >= 1");
  if (!(b > a)) throw InvalidArgument("interval_rule requires a < b");
  QuadratureRule rule;
  rule.kind = RuleKind::interval_lebesgue;
  const auto [gx, gw] = gauss_legendre(kPanelPoints);
  const double width = (b - a) / static_cast<double>(panels);
  for (std::size_t j = 0; j < panels; ++j) {
    const double lo = a + width * static_cast<double>(j);
    const double mid = lo + 0.5 * width;
    for (std::size_t q = 0; q < kPanelPoints; ++q) {
      rule.nodes.push_back(mid + 0.5 * width * gx[q]);
      rule.weights.push_back(0.5 * width * gw[q]);
    }
  }
  return rule;
}

/// Immutable per-(kind, n) cache; safe for concurrent readers.
inline std::shared_ptr<const QuadratureRule> cached_rule(RuleKind kind, std::size_t n) {
  static std::mutex mutex;
  static std::map<std::pair<RuleKind, std::size_t>, std::shared_ptr<const QuadratureRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{kind, n}];
  if (!slot) slot = std::make_shared<const QuadratureRule>(build_rule(kind, n));
  return slot;
}

}  // namespace quadrature

/// Sum of weights * g(nodes). Throws NumericalDomainError on a non-finite sample.
template <class G>
double integrate(const QuadratureRule& rule, G&& g) {
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = g(rule.nodes[i]);
    if (!std::isfinite(v)) throw NumericalDomainError("non-finite integrand", rule.nodes[i]);
    sum += rule.weights[i] * v;
  }
  return sum;
}

}  // namespace oulab
