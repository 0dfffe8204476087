#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lindstedt_cli/config.hpp"

namespace lindstedt::cli {

// Outcome of one property suite. A suite that throws is reported as failed
// with the stage of the error; suites never throw themselves.
struct SuiteResult {
  std::string name;
  bool ok = true;
  std::string stage;    // construct that failed, empty on success
  std::string message;  // first failure
  nlohmann::json detail = nlohmann::json::object();
  double seconds = 0.0;
};

// Timings are left out so that reports are reproducible byte for byte.
nlohmann::json to_json(const SuiteResult& r);

// Q-equation at eta = 0 against D^s 3^{-D}; the squared value is compared exactly for integer s.
SuiteResult suite_leading_amplitude(const RunConfig& c);
// N = 1 packet amplitude A^2 against q0^2.
SuiteResult suite_resonant_consistency(const RunConfig& c);
// Tree sums against the recursion at every support mode for k <= verify.k_max.
SuiteResult suite_oracle_equivalence(const RunConfig& c);
// V_{h1} and L_h equal their transposes for every counterterm block with n <= counterterms.n_max,
// and every block with d >= 2 up to counterterms.wide_n_max, k <= verify.k_max.
SuiteResult suite_counterterm_symmetry(const RunConfig& c);
// Random admissible (A, b, T): cancellation residual and G(L + T)G both vanish.
SuiteResult suite_resonant_cancellation(const RunConfig& c);
// Bryuno count on every tree of the main expansion, k <= verify.k_max; family trees are
// scanned as well and reported with the constant they would need.
SuiteResult suite_bryuno(const RunConfig& c);
SuiteResult suite_partition_of_unity(const RunConfig& c);
// Sphere clusters for p <= clusters.p_max.
SuiteResult suite_cluster_invariants(const RunConfig& c);
// Mode partition on the ball |m| <= bourgain.radius.
SuiteResult suite_bourgain(const RunConfig& c);
// Packet, J blocks and sampled chains for packet.N.
SuiteResult suite_loop_lemma(const RunConfig& c);
SuiteResult suite_derivative_identities(const RunConfig& c);
// Log-log residual slopes of the truncations K = 1..series.K against K + 1.
SuiteResult suite_residual_scaling(const RunConfig& c, double tolerance = 0.2);
// First-Melnikov acceptance fraction is non-decreasing as eps0 decreases over perturbation.eps_grid.
SuiteResult suite_measure_trend(const RunConfig& c);

// The suites run by `verify`, in order.
std::vector<SuiteResult> run_verify_suites(const RunConfig& c);

}  // namespace lindstedt::cli
