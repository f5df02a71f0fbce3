#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "oulab/config.hpp"
#include "oulab/energy.hpp"
#include "oulab/field2d.hpp"
#include "oulab/geometry.hpp"
#include "oulab/heteroclinic.hpp"
#include "oulab/potential.hpp"
#include "oulab/random.hpp"
#include "oulab/stability.hpp"

namespace oulab {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitNegative = 2 };

struct RunOptions {
  unsigned jobs{1};
  bool verbose{false};
};

namespace cli_detail {

using json = nlohmann::json;

inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Run {
 public:
  Run(const ExperimentConfig& cfg, const RunOptions& opt) : cfg_(cfg), opt_(opt), dir_(cfg.out) {
    std::filesystem::create_directories(dir_);
  }

  void log(const std::string& msg) const {
    if (opt_.verbose) std::cerr << "[" << to_string(cfg_.command) << "] " << msg << '\n';
  }

  std::ofstream file(const std::string& name, bool binary = false) {
    artifacts_.push_back(name);
    return io::open_output((dir_ / name).string(), binary);
  }

  json& results() { return results_; }
  const ExperimentConfig& cfg() const { return cfg_; }
  const RunOptions& opt() const { return opt_; }
  const std::vector<std::string>& artifacts() const { return artifacts_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  const ExperimentConfig& cfg_;
  RunOptions opt_;
  std::filesystem::path dir_;
  json results_ = json::object();
  std::vector<std::string> artifacts_;
};

inline json config_json(const ExperimentConfig& c) {
  json pot = {{"name", c.potential.name}, {"A", c.potential.A}};
  if (!c.potential.coefficients.empty()) pot["coefficients"] = c.potential.coefficients;
  if (c.potential.c) pot["c"] = *c.potential.c;
  return {{"command", to_string(c.command)},
          {"potential", pot},
          {"seed", c.seed},
          {"ode", {{"T", c.T}, {"n", c.n}, {"tol", c.tol}}},
          {"energy", {{"n", c.energy_n}, {"max_iter", c.energy_max_iter}, {"gradient_tol", c.gradient_tol}}},
          {"stability", {{"basis_size", c.basis_size}, {"k", c.k}, {"trials", c.trials}}},
          {"flow",
           {{"L", c.L},
            {"h", c.h},
            {"dt", c.dt},
            {"max_steps", c.max_steps},
            {"tol", c.flow_tol},
            {"newton", c.newton},
            {"gradient_floor", c.gradient_floor},
            {"omega", {c.omega[0], c.omega[1]}},
            {"u0", c.u0}}},
          {"poincare", {{"R", c.R}, {"floor", c.critical_floor}}},
          {"sweep", {{"amplitudes", c.amplitudes}}}};
}

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// shared stages

struct Heteroclinic {
  ShootResult shot;
  std::optional<Profile1D> profile;  ///< collocated when possible, else the shooting profile
  bool collocated{false};
};

inline Heteroclinic heteroclinic(const Potential& p, double T, std::size_t n, double tol, bool log_trajectories) {
  Heteroclinic h;
  ShootOptions so;
  so.grid_n = n;
  so.log_trajectories = log_trajectories;
  h.shot = shoot(p, T, so);
  if (!h.shot.profile || !h.shot.profile->monotone) return h;
  try {
    h.profile = collocate(p, *h.shot.profile, T, CollocationOptions{.n = n, .tol = tol}).profile;
    h.collocated = true;
  } catch (const NoConvergenceError&) {
    h.profile = *h.shot.profile;
  }
  return h;
}

inline Field2D initial_field(const ExperimentConfig& c, const Potential& p) {
  if (c.u0 == "zero") return make_field(c.L, c.h);
  if (c.u0 == "lift") {
    const auto het = heteroclinic(p, 8.0, 320, 1e-10, false);
    if (!het.profile) throw ModelInconsistencyError("no heteroclinic profile to lift", 0.0);
    return lift_1d(*het.profile, c.omega[0], c.omega[1], c.L, c.h);
  }
  return make_field(c.L, c.h, [](double x, double y) { return std::tanh(x + 0.3 * std::sin(y)); });
}

struct Steady {
  RelaxResult explicit_phase;
  std::optional<NewtonResult> newton;
  Field2D field;
  bool converged{false};
};

inline Steady steady_state(Run& run, const Potential& p) {
  const auto& c = run.cfg();
  RelaxOptions ro;
  ro.dt = c.dt;
  ro.max_steps = c.max_steps;
  ro.tol = c.flow_tol;
  ro.jobs = run.opt().jobs;
  Steady s;
  s.explicit_phase = relax(p, initial_field(c, p), ro);
  run.log("explicit phase: " + std::to_string(s.explicit_phase.steps) + " steps, residual " +
          io::fmt17(s.explicit_phase.residual.weighted));
  s.field = s.explicit_phase.field;
  s.converged = s.explicit_phase.converged;
  if (!s.converged && c.newton) {
    s.newton = relax_newton(p, s.field);
    run.log("newton phase: " + std::to_string(s.newton->iterations) + " iterations, residual " +
            io::fmt17(s.newton->residual.weighted));
    s.field = s.newton->field;
    s.converged = s.newton->residual.weighted <= c.flow_tol;
  }
  return s;
}

// ---------------------------------------------------------------------------
// commands

inline int solve_ode(Run& run) {
  const auto& c = run.cfg();
  const auto p = c.make_potential();
  const auto het = heteroclinic(p, c.T, c.n, c.tol, true);
  auto& r = run.results();
  r["shoot_status"] = to_string(het.shot.status);
  r["shooting_slope"] = num(het.shot.shooting_slope);
  r["bracket"] = {num(het.shot.bracket.lo), num(het.shot.bracket.hi)};
  {
    auto os = run.file("trials.csv");
    io::CsvWriter w(os);
    w.header({"slope", "outcome", "t_event"});
    for (const auto& t : het.shot.classifier_trace) w.row(t.slope, to_string(t.outcome), t.t_event);
  }
  if (het.shot.status == ShootStatus::nonexistence) {
    double worst = std::numeric_limits<double>::infinity();
    auto os = run.file("trajectories.csv");
    io::CsvWriter w(os);
    w.header({"slope", "outcome", "t", "U", "Uprime"});
    for (const auto& tr : het.shot.trajectories) {
      worst = std::min(worst, growth_ratio(tr, p.c()));
      for (std::size_t i = 0; i < tr.t.size(); ++i) w.row(tr.slope, to_string(tr.outcome), tr.t[i], tr.U[i], tr.V[i]);
    }
    r["growth_ratio_min"] = num(worst);
    return kExitNegative;
  }
  if (!het.profile) {
    r["profile"] = nullptr;
    return kExitNegative;
  }
  const auto& prof = *het.profile;
  {
    auto os = run.file("profile.csv");
    write_profile_csv(prof, os);
  }
  {
    auto os = run.file("shoot_profile.csv");
    write_profile_csv(*het.shot.profile, os);
  }
  r["collocated"] = het.collocated;
  r["monotone"] = prof.monotone;
  r["residual_sup"] = num(prof.residual_sup);
  r["shoot_residual_sup"] = num(het.shot.profile->residual_sup);
  r["splice_point"] = num(het.shot.splice_point);
  const auto [gap, fgap] = limits_check(prof, p);
  r["tail_gap"] = num(gap);
  r["tail_f"] = num(fgap);
  if (c.T >= 8.0) r["U8_minus_c"] = num(ProfileEvaluator(prof).value(8.0) - prof.c);
  double diff = 0.0;
  for (std::size_t i = 0; i < prof.size(); ++i)
    diff = std::max(diff, std::abs(prof.values[i] - het.shot.profile->values[i]));
  r["shoot_collocation_sup_diff"] = diff;
  if (prof.monotone) {
    const auto rep = linearized_spectrum(p, prof, c.k, c.basis_size);
    r["lambda_min"] = rep.eigenvalues.front();
    r["stable_in_paper_sense"] = rep.stable;
  }
  return het.shot.status == ShootStatus::converged && het.collocated ? kExitOk : kExitNegative;
}

inline int minimize_energy(Run& run) {
  const auto& c = run.cfg();
  const auto p = c.make_potential();
  MinimizeOptions mo;
  mo.n = c.energy_n;
  mo.max_iter = c.energy_max_iter;
  mo.gradient_tol = c.gradient_tol;
  const auto rep = minimize(p, mo);
  auto& r = run.results();
  r["G_min"] = rep.value;
  r["G0"] = rep.g0;
  r["dirichlet_part"] = rep.dirichlet_part;
  r["potential_part"] = rep.potential_part;
  r["assen_satisfied"] = rep.assen_satisfied;
  r["nonconstant"] = rep.nonconstant;
  r["degenerate_minimizer"] = rep.degenerate_minimizer;
  r["status"] = to_string(rep.status);
  r["iterations"] = rep.iterations;
  r["gradient_norm"] = num(rep.gradient_norm);
  r["rearrangements_accepted"] = rep.rearrangements_accepted;
  if (rep.minimizer) {
    auto os = run.file("minimizer.csv");
    write_profile_csv(*rep.minimizer, os);
  }
  {
    auto os = run.file("energy_history.csv");
    io::CsvWriter w(os);
    w.header({"iteration", "G"});
    for (std::size_t i = 0; i < rep.history.size(); ++i) w.row(i, rep.history[i]);
  }
  if (rep.refined) {
    auto os = run.file("refined.csv");
    write_profile_csv(*rep.refined, os);
    r["refined_converged"] = rep.refined_converged;
    r["refined_residual_sup"] = num(rep.refined->residual_sup);
  }
  return rep.assen_satisfied ? kExitOk : kExitNegative;
}

inline int check_existence(Run& run) {
  const auto& c = run.cfg();
  const auto p = c.make_potential();
  const double w = p.c();
  const auto rep = existence_screen(p, -w, w);
  auto& r = run.results();
  r["remark_lhs"] = rep.lhs_remark;
  r["remark_rhs"] = rep.rhs_remark;
  r["remark_satisfied"] = rep.remark_satisfied;
  r["verdict"] = to_string(rep.verdict);
  r["remark_threshold"] = remark_threshold();
  if (rep.blocking_interval) r["blocking_interval"] = {rep.blocking_interval->lo, rep.blocking_interval->hi};
  return rep.verdict == ExistenceVerdict::nonexistence_proved ? kExitNegative : kExitOk;
}

inline void write_spectrum(Run& run, const EigenReport& rep, const std::string& tag) {
  auto os = run.file("eigenvalues_" + tag + ".csv");
  write_eigenvalues_csv(rep, os);
}

inline int stability(Run& run) {
  const auto& c = run.cfg();
  const auto p = c.make_potential();
  auto& r = run.results();
  const double w = p.c();
  bool all_stable = true;
  for (const auto& [tag, v] : {std::pair{"zero", 0.0}, std::pair{"well", w}}) {
    if (std::abs(p.f(v)) > 1e-10) continue;
    const auto rep = linearized_spectrum(p, v, c.k, c.basis_size);
    write_spectrum(run, rep, tag);
    r[std::string("lambda_min_") + tag] = rep.eigenvalues.front();
    r[std::string("stable_") + tag] = rep.stable;
  }
  const auto het = heteroclinic(p, c.T, c.n, c.tol, false);
  if (!het.profile || !het.profile->monotone) {
    r["profile"] = nullptr;
    return kExitNegative;
  }
  // the integrated profile is fourth-order accurate, the collocated one second-order
  const bool use_shot = het.shot.status == ShootStatus::converged;
  const auto& prof = use_shot ? *het.shot.profile : *het.profile;
  r["base_profile"] = use_shot ? "shooting" : "collocation";
  const auto rep = linearized_spectrum(p, prof, c.k, c.basis_size);
  write_spectrum(run, rep, "heteroclinic");
  {
    auto os = run.file("eigenfunction_0.csv");
    write_eigenfunction_csv(rep, 0, os);
  }
  {
    // normalised U' at the same nodes, for the overlay
    const ProfileEvaluator ev(prof);
    const auto& x = rep.rule->nodes;
    const auto& wt = rep.rule->weights;
    double norm = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) norm += wt[i] * ev.slope(x[i]) * ev.slope(x[i]);
    norm = std::sqrt(norm);
    auto os = run.file("uprime_normalized.csv");
    io::CsvWriter cw(os);
    cw.header({"node", "value"});
    for (double xi : x)
      if (std::abs(xi) <= 8.0) cw.row(xi, ev.slope(xi) / norm);
  }
  r["lambda_min"] = rep.eigenvalues.front();
  r["eigenvalues"] = rep.eigenvalues;
  r["stable_in_paper_sense"] = rep.stable;
  r["ground_state_mismatch"] = ground_state_mismatch(rep, prof);
  all_stable = all_stable && rep.stable;

  Rng rng(c.seed);
  std::vector<TrialFunction> trials{derivative_trial(prof, p)};
  for (std::size_t k = 0; k < c.trials; ++k) trials.push_back(random_trial(rng));
  const auto chk = stability_inequality_check(rep, trials);
  {
    auto os = run.file("inequality_trials.csv");
    io::CsvWriter cw(os);
    cw.header({"trial", "kind", "form_plus_mass"});
    for (std::size_t k = 0; k < chk.values.size(); ++k) cw.row(k, k == 0 ? "derivative" : "random", chk.values[k]);
  }
  r["inequality_satisfied"] = chk.satisfied;
  return all_stable && chk.satisfied ? kExitOk : kExitNegative;
}

inline json relax_summary(const Steady& s) {
  json j = {{"explicit_steps", s.explicit_phase.steps},
            {"dt", s.explicit_phase.dt},
            {"explicit_residual", num(s.explicit_phase.residual.weighted)},
            {"max_energy_increase", s.explicit_phase.max_energy_increase},
            {"converged", s.converged},
            {"steady_residual", num(s.field.steady_residual)}};
  if (s.newton) {
    j["newton_iterations"] = s.newton->iterations;
    j["newton_converged"] = s.newton->converged;
    j["newton_energy_before"] = s.newton->energy_before;
    j["newton_energy_after"] = s.newton->energy_after;
  }
  const auto [lo, hi] = std::minmax_element(s.field.values.begin(), s.field.values.end());
  j["min_value"] = *lo;
  j["max_value"] = *hi;
  return j;
}

inline int flow_2d(Run& run) {
  const auto& c = run.cfg();
  const auto p = c.make_potential();
  auto& r = run.results();
  const auto s = steady_state(run, p);
  r["relax"] = relax_summary(s);
  {
    auto os = run.file("energy.csv");
    io::CsvWriter w(os);
    w.header({"step", "energy"});
    for (std::size_t k = 0; k < s.explicit_phase.energy.size(); ++k)
      w.row(static_cast<long>(k) * RelaxOptions{}.check_every, s.explicit_phase.energy[k]);
  }
  {
    auto os = run.file("field.csv");
    write_field_csv(s.field, os);
  }
  {
    auto os = run.file("field.bin", true);
    write_field_binary(s.field, os);
  }
  const auto fr = flatness(s.field, c.omega[0], c.omega[1], c.gradient_floor);
  {
    auto os = run.file("flatness.json");
    os << to_json(fr).dump(2) << '\n';
  }
  r["flatness"] = to_json(fr);

  // Cylindrical consistency: the diagonal lift sampled on the 1D grid of spacing h / sqrt(2).
  if (p.has_well()) {
    const double delta = c.h / std::sqrt(2.0);
    const auto n = static_cast<std::size_t>(std::ceil(8.0 / delta));
    const auto seed = heteroclinic(p, 8.0, 2048, 1e-10, false);
    if (seed.profile) {
      try {
        const auto prof = collocate(p, *seed.profile, static_cast<double>(n) * delta, {.n = n, .tol = 1e-10}).profile;
        const double q = 1.0 / std::sqrt(2.0);
        r["lift_residual_diagonal"] = core_residual(lift_1d(prof, q, q, c.L, c.h), p).weighted;
      } catch (const NoConvergenceError& e) {
        r["lift_error"] = e.what();
      }
    }
  }
  return s.converged && fr.one_dimensional ? kExitOk : kExitNegative;
}

inline int poincare_check(Run& run) {
  const auto& c = run.cfg();
  const auto p = c.make_potential();
  auto& r = run.results();
  // pointwise identity on the radial oracle e^{-|x|^2}
  const auto ord = identity_refinement_order([](double x, double y) { return std::exp(-(x * x + y * y)); }, c.L,
                                             2.0 * c.h, 0.1);
  r["identity_order"] = {{"coarse_h", 2.0 * c.h},
                         {"coarse_error", ord.coarse_error},
                         {"fine_error", ord.fine_error},
                         {"order", num(ord.order)}};
  const auto s = steady_state(run, p);
  r["relax"] = relax_summary(s);
  json reps = json::array();
  bool ok = s.converged;
  double prev = std::numeric_limits<double>::infinity();
  bool decaying = true;
  for (double R : c.R) {
    const auto rep = poincare_inequality_check(p, s.field, R, c.critical_floor);
    ok = ok && rep.inequality_satisfied;
    decaying = decaying && rep.rhs_integral < prev;
    prev = rep.rhs_integral;
    reps.push_back(to_json(rep));
  }
  r["reports"] = reps;
  r["rhs_decreasing_in_R"] = decaying;
  {
    auto os = run.file("poincare.json");
    os << json{{"identity_order", r["identity_order"]}, {"reports", reps}}.dump(2) << '\n';
  }
  {
    auto os = run.file("poincare.csv");
    io::CsvWriter w(os);
    w.header({"R", "lhs_integral", "rhs_integral", "inequality_satisfied"});
    for (const auto& j : reps)
      w.row(j["R"].get<double>(), j["lhs_integral"].get<double>(), j["rhs_integral"].get<double>(),
            j["inequality_satisfied"].get<bool>());
  }
  return ok && decaying ? kExitOk : kExitNegative;
}

inline int amplitude_sweep(Run& run) {
  const auto& c = run.cfg();
  MinimizeOptions mo;
  mo.n = c.energy_n;
  mo.max_iter = c.energy_max_iter;
  mo.gradient_tol = c.gradient_tol;
  std::vector<SweepRow> rows(c.amplitudes.size());
  {
    const unsigned jobs = std::max(1u, std::min<unsigned>(run.opt().jobs, static_cast<unsigned>(rows.size())));
    std::vector<std::jthread> pool;
    std::mutex err_mu;
    std::exception_ptr err;
    for (unsigned t = 0; t < jobs; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t k = t; k < rows.size(); k += jobs) {
          try {
            rows[k] = sweep_point(c.amplitudes[k], mo);
          } catch (...) {
            std::lock_guard lock(err_mu);
            if (!err) err = std::current_exception();
          }
        }
      });
    pool.clear();
    if (err) std::rethrow_exception(err);
  }
  {
    auto os = run.file("sweep.csv");
    write_sweep_csv(rows, os);
  }
  // rows sorted by A must switch from false to true at most once
  auto sorted = rows;
  std::sort(sorted.begin(), sorted.end(), [](const SweepRow& a, const SweepRow& b) { return a.A < b.A; });
  bool monotone = true;
  for (std::size_t k = 1; k < sorted.size(); ++k)
    if (sorted[k - 1].assen_satisfied && !sorted[k].assen_satisfied) monotone = false;
  auto& r = run.results();
  r["remark_threshold"] = remark_threshold();
  r["assen_monotone_in_A"] = monotone;
  json tab = json::array();
  for (const auto& row : rows) tab.push_back({{"A", row.A}, {"G_min", row.G_min}, {"G0", row.G0}, {"assen_satisfied", row.assen_satisfied}});
  r["rows"] = tab;
  return monotone ? kExitOk : kExitNegative;
}

}  // namespace cli_detail

/// Runs one experiment and writes <out>/manifest.json whatever happens.
inline int run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  using cli_detail::json;
  const auto t0 = std::chrono::steady_clock::now();
  json manifest = {{"tool", "oulab"},
                   {"version", kVersion},
                   {"started_utc", cli_detail::utc_now()},
                   {"jobs", opt.jobs},
                   {"config", cli_detail::config_json(cfg)}};
  int code = kExitError;
  std::optional<cli_detail::Run> run;
  try {
    run.emplace(cfg, opt);
    switch (cfg.command) {
      case Command::solve_ode: code = cli_detail::solve_ode(*run); break;
      case Command::minimize_energy: code = cli_detail::minimize_energy(*run); break;
      case Command::check_existence: code = cli_detail::check_existence(*run); break;
      case Command::flow_2d: code = cli_detail::flow_2d(*run); break;
      case Command::stability: code = cli_detail::stability(*run); break;
      case Command::poincare_check: code = cli_detail::poincare_check(*run); break;
      case Command::amplitude_sweep: code = cli_detail::amplitude_sweep(*run); break;
    }
  } catch (const std::exception& e) {
    manifest["error"] = e.what();
    code = kExitError;
  }
  if (run) {
    manifest["results"] = run->results();
    manifest["artifacts"] = run->artifacts();
  }
  manifest["status"] = code == kExitOk ? "ok" : code == kExitNegative ? "negative-finding" : "error";
  manifest["exit_code"] = code;
  manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    std::filesystem::create_directories(cfg.out);
    std::ofstream os(std::filesystem::path(cfg.out) / "manifest.json");
    os << manifest.dump(2) << '\n';
    if (!os) throw Error("cannot write manifest");
  } catch (const std::exception& e) {
    std::cerr << "oulab: " << e.what() << '\n';
    return kExitError;
  }
  if (code == kExitError) std::cerr << "oulab: " << manifest["error"].get<std::string>() << '\n';
  return code;
}

}  // namespace oulab
