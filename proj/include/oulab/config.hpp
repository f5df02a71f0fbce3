#pragma once

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oulab/errors.hpp"
#include "oulab/potential.hpp"
#include "oulab/stability.hpp"

namespace oulab {

// Flat key = value experiment files. `[section]` headers prefix the keys that
// follow ("A" under [potential] is "potential.A"); '#' starts a comment.
//
//   command = solve-ode
//   [potential]
//   name = double_well
//   A = 4

enum class Command { solve_ode, minimize_energy, check_existence, flow_2d, stability, poincare_check, amplitude_sweep };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::solve_ode: return "solve-ode";
    case Command::minimize_energy: return "minimize-energy";
    case Command::check_existence: return "check-existence";
    case Command::flow_2d: return "flow-2d";
    case Command::stability: return "stability";
    case Command::poincare_check: return "poincare-check";
    case Command::amplitude_sweep: return "amplitude-sweep";
  }
  return "?";
}

inline std::optional<Command> parse_command(std::string_view s) {
  for (auto c : {Command::solve_ode, Command::minimize_energy, Command::check_existence, Command::flow_2d,
                 Command::stability, Command::poincare_check, Command::amplitude_sweep})
    if (s == to_string(c)) return c;
  return std::nullopt;
}

struct PotentialSpec {
  std::string name{"double_well"};
  double A{4.0};
  std::vector<double> coefficients;  ///< F(t) = sum a_k t^k for name = polynomial
  std::optional<double> c;
};

struct ExperimentConfig {
  Command command{Command::solve_ode};
  PotentialSpec potential;
  std::uint64_t seed{1};
  std::string out{"out"};

  // ode
  double T{8.0};
  std::size_t n{2048};
  double tol{1e-8};
  // energy
  std::size_t energy_n{2048};
  int energy_max_iter{20000};
  double gradient_tol{1e-8};
  // stability
  std::size_t basis_size{256};
  std::size_t k{4};
  std::size_t trials{20};
  // flow
  double L{5.0};
  double h{0.025};
  double dt{0.0};
  long max_steps{20000};
  double flow_tol{1e-5};
  bool newton{true};
  double gradient_floor{1e-2};
  double omega[2]{1.0, 0.0};
  std::string u0{"tanh-sine"};
  // poincare
  std::vector<double> R{2.0, 3.0};
  double critical_floor{1e-3};
  // sweep
  std::vector<double> amplitudes{0.1, 0.5, 1.0, 2.0, remark_threshold(), 4.0, 8.0};

  Potential make_potential() const;
};

inline Potential ExperimentConfig::make_potential() const {
  const auto& s = potential;
  if (s.name == "double_well") return potential::double_well(s.A);
  if (s.name == "inverted_double_well") return potential::inverted_double_well(s.A);
  if (s.name == "polynomial") {
    if (s.coefficients.empty()) throw ConfigError("polynomial potential needs coefficients", 0, "potential.coefficients");
    return potential::polynomial(s.coefficients, s.c);
  }
  throw ConfigError("unknown potential '" + s.name + "'", 0, "potential.name");
}

/// Largest grid size accepted from a config; OU_LAB_MAX_GRID overrides it.
inline std::size_t max_grid() {
  if (const char* env = std::getenv("OU_LAB_MAX_GRID")) {
    std::size_t v = 0;
    const std::string_view s(env);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || v == 0)
      throw ConfigError("OU_LAB_MAX_GRID must be a positive integer");
    return v;
  }
  return 1u << 20;
}

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& v, int line, const std::string& key) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError("expected a number, got '" + v + "'", line, key);
  return x;
}

inline long to_long(const std::string& v, int line, const std::string& key) {
  long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError("expected an integer, got '" + v + "'", line, key);
  return x;
}

inline std::size_t to_size(const std::string& v, int line, const std::string& key) {
  const long x = to_long(v, line, key);
  if (x < 0) throw ConfigError("expected a nonnegative integer", line, key);
  return static_cast<std::size_t>(x);
}

inline bool to_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected true or false, got '" + v + "'", line, key);
}

// Comma or whitespace separated numbers; "A*" stands for the threshold 64 / (9 pi).
inline std::vector<double> to_list(const std::string& v, int line, const std::string& key) {
  std::vector<double> out;
  std::string tok;
  std::string norm = v;
  std::replace(norm.begin(), norm.end(), ',', ' ');
  std::istringstream words(norm);
  while (words >> tok) out.push_back(tok == "A*" ? remark_threshold() : to_double(tok, line, key));
  if (out.empty()) throw ConfigError("empty list", line, key);
  return out;
}

}  // namespace config_detail

inline ExperimentConfig parse_config(std::istream& in) {
  using namespace config_detail;
  ExperimentConfig cfg;
  std::string section, raw;
  bool have_command = false;
  std::map<std::string, int> seen;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("malformed section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) throw ConfigError("empty section name", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line);
    const std::string bare = trim(s.substr(0, eq));
    const std::string v = trim(s.substr(eq + 1));
    if (bare.empty()) throw ConfigError("missing key", line);
    const std::string key = section.empty() ? bare : section + "." + bare;
    if (v.empty()) throw ConfigError("missing value", line, key);
    if (const auto [it, fresh] = seen.emplace(key, line); !fresh)
      throw ConfigError("duplicate key (first set on line " + std::to_string(it->second) + ")", line, key);

    if (key == "command") {
      const auto c = parse_command(v);
      if (!c) throw ConfigError("unknown command '" + v + "'", line, key);
      cfg.command = *c;
      have_command = true;
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(to_size(v, line, key));
    } else if (key == "out") {
      cfg.out = v;
    } else if (key == "potential.name") {
      cfg.potential.name = v;
    } else if (key == "potential.A") {
      cfg.potential.A = to_double(v, line, key);
    } else if (key == "potential.coefficients") {
      cfg.potential.coefficients = to_list(v, line, key);
    } else if (key == "potential.c") {
      cfg.potential.c = to_double(v, line, key);
    } else if (key == "ode.T") {
      cfg.T = to_double(v, line, key);
    } else if (key == "ode.n") {
      cfg.n = to_size(v, line, key);
    } else if (key == "ode.tol") {
      cfg.tol = to_double(v, line, key);
    } else if (key == "energy.n") {
      cfg.energy_n = to_size(v, line, key);
    } else if (key == "energy.max_iter") {
      cfg.energy_max_iter = static_cast<int>(to_long(v, line, key));
    } else if (key == "energy.gradient_tol") {
      cfg.gradient_tol = to_double(v, line, key);
    } else if (key == "stability.basis_size") {
      cfg.basis_size = to_size(v, line, key);
    } else if (key == "stability.k") {
      cfg.k = to_size(v, line, key);
    } else if (key == "stability.trials") {
      cfg.trials = to_size(v, line, key);
    } else if (key == "flow.L") {
      cfg.L = to_double(v, line, key);
    } else if (key == "flow.h") {
      cfg.h = to_double(v, line, key);
    } else if (key == "flow.dt") {
      cfg.dt = to_double(v, line, key);
    } else if (key == "flow.max_steps") {
      cfg.max_steps = to_long(v, line, key);
    } else if (key == "flow.tol") {
      cfg.flow_tol = to_double(v, line, key);
    } else if (key == "flow.newton") {
      cfg.newton = to_bool(v, line, key);
    } else if (key == "flow.gradient_floor") {
      cfg.gradient_floor = to_double(v, line, key);
    } else if (key == "flow.omega") {
      const auto w = to_list(v, line, key);
      if (w.size() != 2) throw ConfigError("omega needs two components", line, key);
      cfg.omega[0] = w[0];
      cfg.omega[1] = w[1];
    } else if (key == "flow.u0") {
      if (v != "tanh-sine" && v != "zero" && v != "lift") throw ConfigError("u0 must be tanh-sine, zero or lift", line, key);
      cfg.u0 = v;
    } else if (key == "poincare.R") {
      cfg.R = to_list(v, line, key);
    } else if (key == "poincare.floor") {
      cfg.critical_floor = to_double(v, line, key);
    } else if (key == "sweep.amplitudes") {
      cfg.amplitudes = to_list(v, line, key);
    } else {
      throw ConfigError("unknown key", line, key);
    }
  }
  if (!have_command) throw ConfigError("missing required key", 0, "command");
  return cfg;
}

/// Range checks that do not need the numerics.
inline void validate(const ExperimentConfig& c) {
  const std::size_t grid = max_grid();
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0)) throw ConfigError("must be > 0", 0, key);
  };
  positive(c.T, "ode.T");
  positive(c.tol, "ode.tol");
  positive(c.gradient_tol, "energy.gradient_tol");
  positive(c.L, "flow.L");
  positive(c.h, "flow.h");
  positive(c.flow_tol, "flow.tol");
  positive(c.gradient_floor, "flow.gradient_floor");
  positive(c.critical_floor, "poincare.floor");
  if (c.dt < 0.0) throw ConfigError("must be >= 0 (0 selects the stability bound)", 0, "flow.dt");
  if (c.n < 4 || c.n > grid) throw ConfigError("must lie in [4, " + std::to_string(grid) + "]", 0, "ode.n");
  if (c.energy_n < 4 || c.energy_n > grid)
    throw ConfigError("must lie in [4, " + std::to_string(grid) + "]", 0, "energy.n");
  if (2.0 * c.L / c.h + 1.0 > static_cast<double>(std::min<std::size_t>(grid, 0xffff)))
    throw ConfigError("grid side 2L/h + 1 exceeds the maximum", 0, "flow.h");
  if (c.basis_size > kMaxBasisSize) throw ConfigError("exceeds " + std::to_string(kMaxBasisSize), 0, "stability.basis_size");
  if (c.k == 0 || c.basis_size < 4 * c.k) throw ConfigError("need k >= 1 and basis_size >= 4k", 0, "stability.k");
  if (c.max_steps < 0) throw ConfigError("must be >= 0", 0, "flow.max_steps");
  if (c.energy_max_iter < 1) throw ConfigError("must be >= 1", 0, "energy.max_iter");
  if (std::abs(std::hypot(c.omega[0], c.omega[1]) - 1.0) > 1e-12) throw ConfigError("must be a unit vector", 0, "flow.omega");
  for (double A : c.amplitudes) positive(A, "sweep.amplitudes");
  for (double R : c.R) positive(R, "poincare.R");
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  auto cfg = parse_config(in);
  validate(cfg);
  return cfg;
}

}  // namespace oulab
