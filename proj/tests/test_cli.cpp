#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "oulab/cli.hpp"

using namespace oulab;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("oulab_test_" + name);
  fs::remove_all(d);
  return d;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, ParsesSectionsAndDefaults) {
  const auto c = parse(
      "# comment\n"
      "command = flow-2d\n"
      "seed = 9\n"
      "[potential]\n"
      "name = double_well\n"
      "A = 4   # trailing comment\n"
      "[flow]\n"
      "L = 4\n"
      "h = 0.05\n"
      "omega = 0, 1\n");
  EXPECT_EQ(c.command, Command::flow_2d);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_DOUBLE_EQ(c.potential.A, 4.0);
  EXPECT_DOUBLE_EQ(c.L, 4.0);
  EXPECT_DOUBLE_EQ(c.h, 0.05);
  EXPECT_DOUBLE_EQ(c.omega[1], 1.0);
  EXPECT_EQ(c.basis_size, 256u);
}

TEST(Config, ThresholdToken) {
  const auto c = parse("command = amplitude-sweep\n[sweep]\namplitudes = 1, A*, 4\n");
  ASSERT_EQ(c.amplitudes.size(), 3u);
  EXPECT_DOUBLE_EQ(c.amplitudes[1], remark_threshold());
}

TEST(Config, ErrorsCarryLineAndKey) {
  try {
    parse("command = solve-ode\n[ode]\nT = 8\nbogus = 1\n");
    FAIL() << "unknown key accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 4);
    EXPECT_EQ(e.key(), "ode.bogus");
  }
  EXPECT_THROW(parse("command = solve-ode\ncommand = stability\n"), ConfigError);
  EXPECT_THROW(parse("command = fly\n"), ConfigError);
  EXPECT_THROW(parse("[ode]\nT = 8\n"), ConfigError);
  EXPECT_THROW(parse("command = solve-ode\n[ode\n"), ConfigError);
  EXPECT_THROW(parse("command = solve-ode\n[ode]\nT = eight\n"), ConfigError);
  EXPECT_THROW(parse("command = solve-ode\nseed\n"), ConfigError);
}

TEST(Config, ValidationRanges) {
  auto c = parse("command = flow-2d\n");
  EXPECT_NO_THROW(validate(c));
  c.omega[1] = 1.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = parse("command = stability\n[stability]\nbasis_size = 400\n");
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, GridCapFromEnvironment) {
  const auto c = parse("command = solve-ode\n[ode]\nn = 4096\n");
  ::setenv("OU_LAB_MAX_GRID", "1000", 1);
  EXPECT_EQ(max_grid(), 1000u);
  EXPECT_THROW(validate(c), ConfigError);
  ::setenv("OU_LAB_MAX_GRID", "abc", 1);
  EXPECT_THROW(max_grid(), ConfigError);
  ::unsetenv("OU_LAB_MAX_GRID");
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, PotentialFactory) {
  auto c = parse("command = check-existence\n[potential]\nname = polynomial\ncoefficients = 0.25, 0, -0.5, 0, 0.25\nc = 1\n");
  const auto p = c.make_potential();
  EXPECT_NEAR(p.F(0.0), 0.25, 1e-15);
  c.potential.name = "nope";
  EXPECT_THROW(c.make_potential(), ConfigError);
}

TEST(Cli, CheckExistenceWritesManifest) {
  auto c = parse("command = check-existence\n[potential]\nA = 4\n");
  c.out = scratch("existence").string();
  EXPECT_EQ(run_experiment(c), kExitOk);
  const auto m = read_json(fs::path(c.out) / "manifest.json");
  EXPECT_EQ(m["status"], "ok");
  EXPECT_EQ(m["exit_code"], 0);
  EXPECT_EQ(m["results"]["verdict"], "sufficient-condition-met");
  EXPECT_EQ(m["config"]["command"], "check-existence");
}

TEST(Cli, NegativeFindingExitCode) {
  auto c = parse("command = check-existence\n[potential]\nname = inverted_double_well\nA = 1\n");
  c.out = scratch("inverted").string();
  EXPECT_EQ(run_experiment(c), kExitNegative);
  EXPECT_EQ(read_json(fs::path(c.out) / "manifest.json")["status"], "negative-finding");
}

TEST(Cli, ErrorPathStillWritesManifest) {
  auto c = parse("command = check-existence\n");
  c.potential.name = "nope";
  c.out = scratch("error").string();
  EXPECT_EQ(run_experiment(c), kExitError);
  const auto m = read_json(fs::path(c.out) / "manifest.json");
  EXPECT_EQ(m["status"], "error");
  EXPECT_FALSE(m["error"].get<std::string>().empty());
}

TEST(Cli, StabilityIsDeterministic) {
  auto c = parse("command = stability\nseed = 3\n[potential]\nA = 4\n[stability]\nbasis_size = 128\ntrials = 5\n");
  c.out = scratch("det_a").string();
  ASSERT_EQ(run_experiment(c), kExitOk);
  const auto a = fs::path(c.out);
  c.out = scratch("det_b").string();
  ASSERT_EQ(run_experiment(c), kExitOk);
  const auto b = fs::path(c.out);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    EXPECT_EQ(read_all(e.path()), read_all(b / e.path().filename())) << e.path().filename();
    ++compared;
  }
  EXPECT_GE(compared, 4u);
}
