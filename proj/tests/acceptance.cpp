// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// usage: acceptance <scratch dir> [<oulab binary> <configs dir>]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include "oulab/cli.hpp"

using namespace oulab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o{false, ""};
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = s < budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s criterion %d: %s [%.2f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", id, o.detail.c_str(), s,
              budget_s, in_time ? "" : ", over budget");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double sup_diff_on(const Profile1D& ref, const Profile1D& other) {
  const ProfileEvaluator ev(other);
  double d = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) d = std::max(d, std::abs(ev.value(ref.grid[i]) - ref.values[i]));
  return d;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// steady state shared by the flow and geometry criteria
std::optional<Field2D> steady;

}  // namespace

int main(int argc, char** argv) {
  const fs::path scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "oulab_acceptance";
  const std::string oulab_bin = argc > 2 ? argv[2] : "";
  const fs::path configs = argc > 3 ? fs::path(argv[3]) : fs::path();
  fs::create_directories(scratch);

  criterion(1, 1.0, [] {
    const auto r = quadrature::build_rule(RuleKind::full_line_normalized, 20);
    const double m0 = integrate(r, [](double) { return 1.0; });
    const double m2 = integrate(r, [](double x) { return x * x; });
    const double m4 = integrate(r, [](double x) { return x * x * x * x; });
    const auto half = quadrature::build_rule(RuleKind::half_line_unnormalized, quadrature::kDefaultHalfLinePanels);
    const double mass = half.total_mass();
    const double e = std::max({std::abs(m0 - 1), std::abs(m2 - 1), std::abs(m4 - 3)});
    const double eh = std::abs(mass - std::sqrt(std::numbers::pi / 2));
    return Outcome{e <= 1e-12 && eh <= 1e-10, fmt("moment error %.2e, half-line mass error %.2e", e, eh)};
  });

  criterion(2, 1.0, [] {
    const auto r1 = existence_screen(potential::double_well(1.0), -1.0, 1.0);
    const auto r4 = existence_screen(potential::double_well(4.0), -1.0, 1.0);
    const double a = remark_threshold();
    const bool below = existence_screen(potential::double_well(0.99 * a), -1.0, 1.0).remark_satisfied;
    const bool above = existence_screen(potential::double_well(1.01 * a), -1.0, 1.0).remark_satisfied;
    const double el = std::abs(r1.lhs_remark - std::sqrt(2.0) / 3.0);
    const double er = std::abs(r1.rhs_remark - std::sqrt(std::numbers::pi / 2.0) / 4.0);
    const double ea = std::abs(a - 64.0 / (9.0 * std::numbers::pi));
    const bool ok = el <= 1e-8 && er <= 1e-10 && !r1.remark_satisfied && r4.remark_satisfied && ea <= 1e-10 && !below &&
                    above;
    return Outcome{ok, fmt("lhs err %.2e, rhs err %.2e, A=1 %d, A=4 %d, A* = %.12f, bracket %d/%d", el, er,
                           r1.remark_satisfied, r4.remark_satisfied, a, below, above)};
  });

  criterion(3, 10.0, [] {
    const auto p = potential::inverted_double_well(1.0);
    const auto scr = existence_screen(p, -1.0, 1.0);
    ShootOptions o;
    o.log_trajectories = true;
    const auto sh = shoot(p, 8.0, o);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& tr : sh.trajectories) worst = std::min(worst, growth_ratio(tr, p.c()));
    const bool ok = scr.verdict == ExistenceVerdict::nonexistence_proved && sh.status == ShootStatus::nonexistence &&
                    !sh.trajectories.empty() && worst >= 1.0 - 1e-6;
    return Outcome{ok, fmt("verdict %s, shoot %s, %zu trajectories, min growth ratio %.9f", to_string(scr.verdict),
                           to_string(sh.status), sh.trajectories.size(), worst)};
  });

  criterion(4, 30.0, [] {
    const auto p = potential::double_well(4.0);
    const auto sh = shoot(p, 8.0);
    if (sh.status != ShootStatus::converged || !sh.profile) return Outcome{false, "shooting did not converge"};
    const auto col = collocate(p, *sh.profile, 8.0);
    const auto& u = col.profile;
    const double d = sup_diff_on(*sh.profile, u);
    const double gap = std::abs(u.values.back() - 1.0);
    const bool ok = u.monotone && u.residual_sup <= 1e-8 && gap <= 1e-5 && d <= 1e-5;
    return Outcome{ok, fmt("monotone %d, residual %.2e, |U(8)-1| %.2e, shoot/collocation diff %.2e", u.monotone,
                           u.residual_sup, gap, d)};
  });

  criterion(5, 60.0, [] {
    double worst_const = 0.0, worst_l = 0.0, worst_m = 0.0;
    bool all_stable = true;
    for (double A : {2.0, 4.0, 8.0}) {
      const auto p = potential::double_well(A);
      const auto r0 = linearized_spectrum(p, 0.0, 4, 256);
      const auto r1 = linearized_spectrum(p, 1.0, 4, 256);
      worst_const = std::max({worst_const, std::abs(r0.eigenvalues[0] + A), std::abs(r1.eigenvalues[0] - 2 * A)});
      const auto sh = shoot(p, 8.0);
      if (!sh.profile || !sh.profile->monotone) return Outcome{false, fmt("no monotone profile at A = %g", A)};
      const auto r = linearized_spectrum(p, *sh.profile, 4, 256);
      all_stable = all_stable && r.stable;
      if (A == 4.0) {
        worst_l = std::abs(r.eigenvalues[0] + 1.0);
        worst_m = ground_state_mismatch(r, *sh.profile);
      }
    }
    const bool ok = worst_l <= 1e-6 && worst_m <= 1e-5 && worst_const <= 1e-8 && all_stable;
    return Outcome{ok, fmt("|lambda_min+1| %.2e, ground mismatch %.2e, constant-state error %.2e, all stable %d",
                           worst_l, worst_m, worst_const, all_stable)};
  });

  criterion(6, 30.0, [] {
    const auto p = potential::double_well(4.0);
    const auto rule = quadrature::cached_rule(RuleKind::half_line_unnormalized, quadrature::kDefaultHalfLinePanels);
    Rng rng(7);
    double eq = 0.0, dir = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 100; ++k) {
      const auto u = random_profile(rng, 1.0, 12.0, 2048);
      const ProfileEvaluator ev(u);
      const GaussianRearrangement R(u);
      std::vector<double> s, ds;
      R.evaluate(rule->nodes, s, ds);
      double a[3] = {0, 0, 0}, b[3] = {0, 0, 0};
      for (std::size_t i = 0; i < rule->order(); ++i) {
        const double w = rule->weights[i], v = ev.value(rule->nodes[i]);
        a[0] += w * p.F(v), a[1] += w * v, a[2] += w * v * v;
        b[0] += w * p.F(s[i]), b[1] += w * s[i], b[2] += w * s[i] * s[i];
      }
      for (int j = 0; j < 3; ++j) eq = std::max(eq, std::abs(a[j] - b[j]));
      dir = std::max(dir, rearranged_energy(p, u).dirichlet_part - energy(p, u).dirichlet_part);
    }
    Profile1D m;
    m.c = 1.0;
    m.grid = uniform_grid(0.0, 12.0, 2048);
    for (double t : m.grid) {
      m.values.push_back(std::tanh(t));
      m.derivative.push_back(1.0 - std::tanh(t) * std::tanh(t));
    }
    const auto ms = ehrhard_rearrange(m);
    double idem = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) idem = std::max(idem, std::abs(ms.values[i] - m.values[i]));
    const bool ok = eq <= 1e-6 && dir <= 1e-6 && idem <= 1e-9;
    return Outcome{ok, fmt("equimeasurability %.2e, max Dirichlet increase %.2e, idempotence %.2e", eq, dir, idem)};
  });

  criterion(7, 300.0, [] {
    const auto p4 = potential::double_well(4.0);
    const auto r4 = minimize(p4);
    const auto sh = shoot(p4, 8.0);
    if (!r4.minimizer || !sh.profile) return Outcome{false, "missing minimizer or shooting profile"};
    const double d = sup_diff_on(*sh.profile, *r4.minimizer);
    const auto r01 = minimize(potential::double_well(0.1));
    std::vector<SweepRow> rows;
    for (double A : {0.1, 0.5, 1.0, 2.0, remark_threshold(), 4.0, 8.0}) rows.push_back(sweep_point(A));
    bool mono = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
      mono = mono && (rows[i].assen_satisfied || !rows[i - 1].assen_satisfied) && rows[i].G_min >= rows[i - 1].G_min;
    const bool ok = r4.assen_satisfied && r4.value < r4.g0 && d <= 1e-3 && !r01.nonconstant && !r01.assen_satisfied &&
                    mono;
    return Outcome{ok, fmt("G_min(4) %.6f < G(0) %.6f, minimizer vs shooting %.2e, A=0.1 constant %d assen %d, "
                           "sweep monotone %d",
                           r4.value, r4.g0, d, !r01.nonconstant, r01.assen_satisfied, mono)};
  });

  criterion(8, 900.0, [] {
    const auto p = potential::double_well(4.0);
    const auto u0 = make_field(5.0, 0.025, [](double x, double y) { return std::tanh(x + 0.3 * std::sin(y)); });
    RelaxOptions ro;
    ro.max_steps = 20000;
    const auto rr = relax(p, u0, ro);
    Field2D f = rr.field;
    ResidualNorms res = rr.residual;
    bool converged = rr.converged;
    std::string how = fmt("explicit %ld steps", rr.steps);
    if (!converged) {
      NewtonOptions no;
      no.max_iter = 200;
      const auto nr = relax_newton(p, f, no);
      f = nr.field;
      res = nr.residual;
      converged = nr.converged || res.weighted <= 1e-5;
      how += fmt(" + %d Newton steps", nr.iterations);
    }
    const auto fl = flatness(f, 1.0, 0.0);
    steady = f;

    // exact lift along the diagonal: collocate on the diagonal spacing
    const double delta = 0.025 / std::sqrt(2.0);
    const auto n = static_cast<std::size_t>(std::ceil(8.0 / delta));
    const auto sh = shoot(p, 8.0);
    CollocationOptions co;
    co.n = n;
    const auto prof = collocate(p, *sh.profile, static_cast<double>(n) * delta, co).profile;
    const double w = 1.0 / std::sqrt(2.0);
    const auto lift = lift_1d(prof, w, w, 5.0, 0.025);
    const double lres = core_residual(lift, p).weighted;
    const bool ok = converged && res.weighted <= 1e-5 && fl.angular_spread < 1e-2 && lres <= 1e-6;
    return Outcome{ok, fmt("%s, core residual %.2e, angular spread %.2e rad, diagonal lift residual %.2e",
                           how.c_str(), res.weighted, fl.angular_spread, lres)};
  });

  criterion(9, 300.0, [] {
    const auto ord =
        identity_refinement_order([](double x, double y) { return std::exp(-(x * x + y * y)); }, 5.0, 0.05, 0.1);
    if (!steady) return Outcome{false, "no steady state from the flow criterion"};
    const auto p = potential::double_well(4.0);
    const auto r2 = poincare_inequality_check(p, *steady, 2.0);
    const auto r3 = poincare_inequality_check(p, *steady, 3.0);
    const bool ok = ord.order >= 1.8 && r2.inequality_satisfied && r3.inequality_satisfied &&
                    r3.rhs_integral < r2.rhs_integral;
    return Outcome{ok, fmt("identity order %.3f, R=2 lhs %.3e rhs %.3e, R=3 lhs %.3e rhs %.3e", ord.order,
                           r2.lhs_integral, r2.rhs_integral, r3.lhs_integral, r3.rhs_integral)};
  });

  criterion(10, 600.0, [&] {
    // two independent runs per experiment through the command-line tool
    const std::vector<std::string> names{"solve_ode_a4", "stability_a4", "minimize_a4", "check_existence_a1"};
    std::size_t files = 0, mismatched = 0;
    for (const auto& name : names) {
      fs::path out[2];
      for (int k = 0; k < 2; ++k) {
        out[k] = scratch / (name + "_run" + std::to_string(k));
        fs::remove_all(out[k]);
        int code;
        if (!oulab_bin.empty()) {
          const std::string cmd = "\"" + oulab_bin + "\" --config \"" + (configs / (name + ".conf")).string() +
                                  "\" --out \"" + out[k].string() + "\"";
          code = std::system(cmd.c_str());
        } else {
          auto cfg = load_config((configs / (name + ".conf")).string());
          cfg.out = out[k].string();
          code = run_experiment(cfg);
        }
        if (code != 0) return Outcome{false, name + " exited with " + std::to_string(code)};
      }
      for (const auto& e : fs::directory_iterator(out[0])) {
        if (e.path().extension() != ".csv") continue;
        ++files;
        if (read_all(e.path()) != read_all(out[1] / e.path().filename())) ++mismatched;
      }
    }
    return Outcome{files > 0 && mismatched == 0, fmt("%zu CSV files compared, %zu differ", files, mismatched)};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
