#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oulab/errors.hpp"
#include "oulab/io.hpp"
#include "oulab/potential.hpp"
#include "oulab/profile.hpp"
#include "oulab/quadrature.hpp"
#include "oulab/random.hpp"

namespace oulab {

// Spectrum of L = -(d^2/dx^2 - x d/dx) - f'(u(x)) on L^2(gamma), gamma the standard
// Gaussian. In the orthonormal Hermite basis psi_k = He_k / sqrt(k!) the
// Ornstein-Uhlenbeck form is diag(0, 1, 2, ...), so only f'(u) needs quadrature.

inline constexpr std::size_t kMaxBasisSize = quadrature::kMaxFullLineOrder;
inline constexpr double kStabilitySlack = 1e-6;

/// A base state u(x) on the line.
struct BaseState {
  std::string tag;
  std::function<double(double)> u;
};

inline BaseState constant_state(const Potential& p, double value) {
  if (std::abs(p.f(value)) > 1e-10) throw InvalidArgument("constant base state must be a zero of f");
  return {"constant " + io::fmt17(value), [value](double) { return value; }};
}

/// Cubic Hermite interpolation of the profile, odd extension for half-line
/// profiles, +-c beyond the grid.
inline BaseState profile_state(const Profile1D& prof, std::string tag = "profile") {
  if (!prof.monotone) throw InvalidArgument("profile base state must be a converged monotone profile");
  auto holder = std::make_shared<Profile1D>(prof);
  auto ev = std::make_shared<ProfileEvaluator>(*holder);
  return {std::move(tag), [holder, ev](double x) { return ev->value(x); }};
}

struct EigenReport {
  std::string state_tag;
  std::vector<double> eigenvalues;                ///< ascending, k lowest
  std::vector<std::vector<double>> eigenvectors;  ///< Hermite coefficients, unit Euclidean norm
  bool stable{false};  ///< lambda_min >= -1 (up to kStabilitySlack)
  std::size_t basis_size{0};
  std::shared_ptr<const QuadratureRule> rule;
  std::vector<double> multiplier;  ///< f'(u(x_i)) at the rule nodes
  Eigen::MatrixXd scaled_basis;    ///< sqrt(w_i) psi_k(x_i)

  /// sqrt(w_i) phi_j(x_i) for eigenfunction j.
  std::vector<double> scaled_eigenfunction(std::size_t j) const {
    Eigen::Map<const Eigen::VectorXd> a(eigenvectors.at(j).data(), static_cast<Eigen::Index>(basis_size));
    Eigen::VectorXd v = scaled_basis * a;
    return {v.data(), v.data() + v.size()};
  }

  /// Eigenfunction j at x (Clenshaw-free forward recurrence; fine for moderate |x|).
  double eigenfunction(std::size_t j, double x) const {
    const auto& a = eigenvectors.at(j);
    double prev = 0.0, cur = 1.0, s = a[0];
    for (std::size_t k = 1; k < basis_size; ++k) {
      const double next = (x * cur - std::sqrt(static_cast<double>(k - 1)) * prev) / std::sqrt(static_cast<double>(k));
      prev = cur;
      cur = next;
      s += a[k] * cur;
    }
    return s;
  }
};

/// Quadrature order used for a given basis size.
inline std::size_t spectrum_quadrature_order(std::size_t basis) {
  return std::min(quadrature::kMaxFullLineOrder, std::max<std::size_t>(2 * basis, 64));
}

inline EigenReport linearized_spectrum(const Potential& p, const BaseState& state, std::size_t k,
                                       std::size_t basis) {
  if (k == 0) throw InvalidArgument("need at least one eigenpair");
  if (basis < 4 * k) throw InvalidArgument("basis_size must be at least 4k");
  if (basis > kMaxBasisSize) throw InvalidArgument("basis_size exceeds " + std::to_string(kMaxBasisSize));
  EigenReport rep;
  rep.state_tag = state.tag;
  rep.basis_size = basis;
  rep.rule = quadrature::cached_rule(RuleKind::full_line_normalized, spectrum_quadrature_order(basis));
  const auto& x = rep.rule->nodes;
  const auto& w = rep.rule->weights;
  const auto Q = static_cast<Eigen::Index>(x.size());
  const auto B = static_cast<Eigen::Index>(basis);

  rep.multiplier.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = p.fprime(state.u(x[i]));
    if (!std::isfinite(m)) throw NumericalDomainError("non-finite f'(u)", x[i]);
    rep.multiplier[i] = m;
  }

  // Recurrence started from sqrt(w_i) keeps every entry representable.
  rep.scaled_basis.resize(Q, B);
  for (Eigen::Index i = 0; i < Q; ++i) {
    double prev = 0.0, cur = std::sqrt(w[static_cast<std::size_t>(i)]);
    rep.scaled_basis(i, 0) = cur;
    for (Eigen::Index j = 1; j < B; ++j) {
      const double next = (x[static_cast<std::size_t>(i)] * cur - std::sqrt(static_cast<double>(j - 1)) * prev) /
                          std::sqrt(static_cast<double>(j));
      prev = cur;
      cur = next;
      rep.scaled_basis(i, j) = cur;
    }
  }
  const Eigen::Map<const Eigen::VectorXd> mult(rep.multiplier.data(), Q);
  Eigen::MatrixXd M = -(rep.scaled_basis.transpose() * mult.asDiagonal() * rep.scaled_basis);
  for (Eigen::Index j = 0; j < B; ++j) M(j, j) += static_cast<double>(j);
  M = 0.5 * (M + M.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success) throw NumericalDomainError("eigensolver failed", 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    rep.eigenvalues.push_back(es.eigenvalues()[static_cast<Eigen::Index>(j)]);
    const auto v = es.eigenvectors().col(static_cast<Eigen::Index>(j));
    std::vector<double> a(v.data(), v.data() + v.size());
    // Sign convention: positive mean (largest |coefficient| positive when the mean vanishes).
    const auto big = std::max_element(a.begin(), a.end(), [](double l, double r) { return std::abs(l) < std::abs(r); });
    const double sgn = std::abs(a[0]) > 1e-8 ? a[0] : *big;
    if (sgn < 0)
      for (double& c : a) c = -c;
    rep.eigenvectors.push_back(std::move(a));
  }
  rep.stable = rep.eigenvalues.front() >= -1.0 - kStabilitySlack;
  return rep;
}

inline EigenReport linearized_spectrum(const Potential& p, double constant, std::size_t k, std::size_t basis) {
  return linearized_spectrum(p, constant_state(p, constant), k, basis);
}

inline EigenReport linearized_spectrum(const Potential& p, const Profile1D& prof, std::size_t k,
                                       std::size_t basis) {
  return linearized_spectrum(p, profile_state(prof, "heteroclinic"), k, basis);
}

/// A smooth test function with its derivative.
struct TrialFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;

  /// Derivative by fourth-order central differences.
  static TrialFunction from_value(std::function<double(double)> v, double h = 1e-3) {
    auto d = [v, h](double x) { return (8.0 * (v(x + h) - v(x - h)) - (v(x + 2 * h) - v(x - 2 * h))) / (12.0 * h); };
    return {std::move(v), d};
  }
};

struct InequalityCheck {
  bool satisfied{true};
  std::vector<double> values;  ///< int (phi'^2 - f'(u) phi^2) + int phi^2, per trial
};

/// Direct quadrature of the stability form plus the L^2 mass for every trial.
inline InequalityCheck stability_inequality_check(const EigenReport& rep, const std::vector<TrialFunction>& trials,
                                                  double tol = kStabilitySlack) {
  InequalityCheck out;
  const auto& x = rep.rule->nodes;
  const auto& w = rep.rule->weights;
  for (const auto& tr : trials) {
    double q = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (w[i] == 0.0) continue;
      const double v = tr.value(x[i]), d = tr.derivative(x[i]);
      q += w[i] * (d * d - rep.multiplier[i] * v * v + v * v);
    }
    out.values.push_back(q);
    if (!(q >= -tol)) out.satisfied = false;
  }
  return out;
}

/// Profile derivative U' as a trial function, with U'' from the ODE.
inline TrialFunction derivative_trial(const Profile1D& prof, const Potential& p) {
  auto holder = std::make_shared<Profile1D>(prof);
  auto ev = std::make_shared<ProfileEvaluator>(*holder);
  return {[holder, ev](double x) { return ev->slope(x); },
          [holder, ev, p](double x) {
            const auto [u, du] = ev->eval(x);
            if (du == 0.0) return 0.0;
            return x * du - p.f(u);
          }};
}

/// Bounded smooth random trial: a short cosine series plus a tanh step.
inline TrialFunction random_trial(Rng& rng) {
  std::vector<double> a(4), om(4), ph(4);
  for (int j = 0; j < 4; ++j) a[j] = rng.uniform(-1, 1), om[j] = rng.uniform(0.1, 3.0), ph[j] = rng.uniform(0, 6.283185307179586);
  const double b = rng.uniform(-1, 1), s = rng.uniform(0.3, 3.0), x0 = rng.uniform(-2, 2);
  auto v = [=](double x) {
    double r = b * std::tanh(s * (x - x0));
    for (int j = 0; j < 4; ++j) r += a[j] * std::cos(om[j] * x + ph[j]);
    return r;
  };
  auto d = [=](double x) {
    const double th = std::tanh(s * (x - x0));
    double r = b * s * (1 - th * th);
    for (int j = 0; j < 4; ++j) r -= a[j] * om[j] * std::sin(om[j] * x + ph[j]);
    return r;
  };
  return {v, d};
}

/// Weighted L^2 distance between the ground eigenfunction and U'/||U'||, after sign alignment.
inline double ground_state_mismatch(const EigenReport& rep, const Profile1D& prof) {
  const ProfileEvaluator ev(prof);
  const auto& x = rep.rule->nodes;
  const auto& w = rep.rule->weights;
  const auto phi = rep.scaled_eigenfunction(0);
  std::vector<double> g(x.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    g[i] = std::sqrt(w[i]) * ev.slope(x[i]);
    norm += g[i] * g[i];
  }
  norm = std::sqrt(norm);
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += phi[i] * g[i];
  const double s = dot >= 0 ? 1.0 : -1.0;
  double e = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = phi[i] - s * g[i] / norm;
    e += d * d;
  }
  return std::sqrt(e);
}

inline void write_eigenvalues_csv(const EigenReport& rep, std::ostream& os) {
  io::CsvWriter w(os);
  w.header({"index", "eigenvalue"});
  for (std::size_t j = 0; j < rep.eigenvalues.size(); ++j) w.row(j, rep.eigenvalues[j]);
}

/// Eigenfunction j at the quadrature nodes with |x| <= xmax (the polynomial
/// expansion is meaningless far out where the Gaussian weight underflows).
inline void write_eigenfunction_csv(const EigenReport& rep, std::size_t j, std::ostream& os, double xmax = 8.0) {
  io::CsvWriter w(os);
  w.header({"node", "value"});
  for (double x : rep.rule->nodes)
    if (std::abs(x) <= xmax) w.row(x, rep.eigenfunction(j, x));
}

}  // namespace oulab
