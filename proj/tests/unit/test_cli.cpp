#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lindstedt/errors.hpp"
#include "lindstedt_cli/commands.hpp"
#include "lindstedt_cli/config.hpp"
#include "lindstedt_cli/suites.hpp"

using namespace lindstedt;
using namespace lindstedt::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lindstedt_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LINDSTEDT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const RunConfig c = default_config(2);
  const json j = to_json(c);
  EXPECT_EQ(to_json(parse_config(j)), j);
  EXPECT_EQ(to_json(parse_config(json::object())), j);
  const json j3 = to_json(default_config(3));
  EXPECT_EQ(to_json(parse_config(j3)), j3);
}

TEST(Config, DimensionSelectsDefaults) {
  const RunConfig c = parse_config(json{{"problem", {{"D", 3}}}});
  EXPECT_EQ(c.freq.D, 3);
  EXPECT_GT(c.freq.tau, c.freq.tau0 + 1 + 3);
  EXPECT_EQ(to_json(c)["bourgain"], to_json(default_config(3))["bourgain"]);
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(parse_config(json{{"bogus", 1}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"series", {{"KK", 2}}}}), ConfigError);
}

TEST(Config, TypesAreStrict) {
  EXPECT_THROW(parse_config(json{{"series", {{"K", 2.5}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"series", {{"K", "2"}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"problem", {{"resonant", 1}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"series", {{"arithmetic", "decimal"}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"seed", -1}}), ConfigError);
  EXPECT_THROW(parse_config(json::array()), ConfigError);
}

TEST(Config, RelationsValidated) {
  EXPECT_THROW(parse_config(json{{"problem", {{"D", 7}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"diophantine", {{"tau", 2.5}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"diophantine", {{"gamma", 0.02}}}}), ConfigError);
}

TEST(Config, OutputDirEnvironmentOverride) {
  RunConfig c = default_config(2);
  c.output_dir = "from_config";
  unsetenv("LINDSTEDT_OUTPUT_DIR");
  EXPECT_EQ(output_dir(c), "from_config");
  setenv("LINDSTEDT_OUTPUT_DIR", "/tmp/from_env", 1);
  EXPECT_EQ(output_dir(c), "/tmp/from_env");
  unsetenv("LINDSTEDT_OUTPUT_DIR");
}

TEST(Config, ShippedFilesParse) {
  for (const char* name : {"default.json", "d3.json"}) {
    const fs::path p = fs::path(LINDSTEDT_CONFIG_DIR) / name;
    EXPECT_NO_THROW(load_config_file(p.string())) << p;
  }
  EXPECT_THROW(load_config_file("/nonexistent/config.json"), ConfigError);
}

TEST(Commands, ClustersWritesArtifacts) {
  unsetenv("LINDSTEDT_OUTPUT_DIR");
  RunConfig c = default_config(2);
  c.clusters_p_max = 200;
  c.bourgain_radius = 6.0;
  c.output_dir = scratch("clusters").string();
  std::ostringstream out;
  EXPECT_EQ(cmd_clusters(c, out), 0);
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "clusters.csv"));
  const json j = json::parse(slurp(fs::path(c.output_dir) / "clusters.json"));
  EXPECT_TRUE(j.is_object());
}

TEST(Commands, MeasureEmptyGridIsConfigError) {
  RunConfig c = default_config(2);
  c.eps_grid.clear();
  c.output_dir = scratch("measure").string();
  std::ostringstream out;
  EXPECT_THROW(cmd_measure(c, out), ConfigError);
}

TEST(Commands, SolveIsDeterministic) {
  RunConfig c = default_config(2);
  c.K = 1;
  c.eta_points = 3;
  std::string first;
  for (int run = 0; run < 2; ++run) {
    c.output_dir = scratch("solve").string();
    std::ostringstream out;
    ASSERT_EQ(cmd_solve(c, out), 0);
    const std::string s = slurp(fs::path(c.output_dir) / "coefficients.csv") +
                          slurp(fs::path(c.output_dir) / "solve.json");
    if (run == 0) first = s;
    else EXPECT_EQ(s, first);
  }
}

TEST(Suites, InjectedAsymmetryIsCaught) {
  RunConfig c = default_config(2);
  c.verify_k_max = 1;
  c.symmetry_n_max = 4;
  c.symmetry_wide_n_max = 90;
  EXPECT_TRUE(suite_counterterm_symmetry(c).ok);
  c.inject_asymmetry = true;
  const SuiteResult r = suite_counterterm_symmetry(c);
  EXPECT_FALSE(r.ok);
  EXPECT_FALSE(r.message.empty());
}

TEST(Executable, ExitCodes) {
  const fs::path dir = scratch("exe");
  const std::string od = " --output-dir " + dir.string();
  EXPECT_EQ(run_cli("clusters --clusters-p-max 100 --bourgain-radius 5" + od), 0);
  EXPECT_EQ(run_cli("solve --K 1 --eta-points 3" + od), 0);
  EXPECT_EQ(run_cli("solve --mu 0" + od), 1);
  EXPECT_EQ(run_cli("solve --no-such-flag" + od), 2);
  EXPECT_EQ(run_cli("solve --D 7" + od), 2);
  EXPECT_EQ(run_cli("measure --eps-grid \"\"" + od), 2);
  EXPECT_EQ(run_cli("solve --config /nonexistent.json" + od), 2);
  EXPECT_EQ(run_cli(od), 2);
}

TEST(Executable, EnvironmentOverridesOutputDir) {
  const fs::path dir = scratch("env");
  const std::string cmd = "LINDSTEDT_OUTPUT_DIR=" + dir.string() + " " + LINDSTEDT_CLI_PATH +
                          " clusters --clusters-p-max 50 --bourgain-radius 4 --output-dir /nonexistent/x >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(st));
  EXPECT_EQ(WEXITSTATUS(st), 0);
  EXPECT_TRUE(fs::exists(dir / "clusters.csv"));
}
