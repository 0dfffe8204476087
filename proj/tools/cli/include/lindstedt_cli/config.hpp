#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "lindstedt/lattice.hpp"
#include "lindstedt/smalldiv.hpp"

namespace lindstedt::cli {

enum class Arithmetic { Rational, Float };

struct RunConfig {
  FrequencyContext freq;
  bool resonant = false;

  std::vector<double> eps_grid{0.1, 0.05, 0.01};
  long grid_size = 10000;
  std::string measure_predicate = "first_melnikov";

  BumpProfile profile = BumpProfile::Smoothstep;
  ClusterConstants clusters = ClusterConstants::defaults(2);
  BourgainConstants bourgain = BourgainConstants::defaults(2);
  long clusters_p_max = 10000;
  double bourgain_radius = 20.0;

  int K = 2;
  Arithmetic arithmetic = Arithmetic::Rational;
  double eta_min = 1e-4;
  double eta_max = 1e-2;
  int eta_points = 9;
  int reconstruct_points = 9;

  long symmetry_n_max = 8;
  long symmetry_wide_n_max = 130;
  long fixpoint_n_max = 4;
  int fixpoint_max_iter = 50;
  double fixpoint_tol = 1e-13;
  double K2 = 10.0;

  double bryuno_c = 1.0;
  double bryuno_beta = 1.0 / 3.0;

  int verify_k_max = 3;
  bool inject_asymmetry = false;
  int random_trials = 100;

  int N = 1;
  double r_min = 0.0;
  double r_max = 60.0;
  std::vector<double> alphas;
  long block_bound = 50;
  long chains = 2000;
  int chain_length = 40;
  double s_min = 0.5;
  double s_max = 2.0;
  int s_points = 100;
  long block_window = 2000;

  std::uint64_t seed = 1;
  std::string output_dir = "lindstedt_out";

  CutoffSpec cutoff() const;
  std::shared_ptr<ClusterCatalog> catalog() const;
};

// Defaults for dimension D (cluster and partition constants follow D).
RunConfig default_config(int D = 2);
// Strict parse: unknown keys and ill-typed values raise ConfigError; groups that are
// absent keep the defaults for the configured D. All FrequencyContext relations are validated.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config_file(const std::string& path);
nlohmann::json to_json(const RunConfig& c);
// LINDSTEDT_OUTPUT_DIR overrides the configured directory.
std::string output_dir(const RunConfig& c);
void validate(const RunConfig& c);

}  // namespace lindstedt::cli
