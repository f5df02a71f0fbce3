#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "oulab/cli.hpp"

namespace {

// Config could not be read: still leave a manifest behind.
int config_failure(const std::string& out, const std::string& path, const std::string& what) {
  std::cerr << "oulab: " << what << '\n';
  try {
    std::filesystem::create_directories(out);
    std::ofstream os(std::filesystem::path(out) / "manifest.json");
    os << nlohmann::json{{"tool", "oulab"},
                         {"version", oulab::kVersion},
                         {"config_path", path},
                         {"status", "error"},
                         {"exit_code", oulab::kExitError},
                         {"error", what}}
              .dump(2)
       << '\n';
  } catch (const std::exception&) {
  }
  return oulab::kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ornstein-Uhlenbeck symmetry lab"};
  std::string config_path, out;
  unsigned jobs = 1;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  app.add_option("--config", config_path, "experiment file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory (overrides the config)");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1u, 256u));
  app.add_option("--seed", seed, "seed for randomized trials (overrides the config)");
  app.add_flag("--verbose", verbose, "progress on stderr");
  CLI11_PARSE(app, argc, argv);

  oulab::ExperimentConfig cfg;
  try {
    cfg = oulab::load_config(config_path);
  } catch (const oulab::Error& e) {
    return config_failure(out.empty() ? "out" : out, config_path, e.what());
  }
  if (!out.empty()) cfg.out = out;
  if (seed) cfg.seed = *seed;
  return oulab::run_experiment(cfg, {jobs, verbose});
}
