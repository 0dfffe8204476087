// Runs the thirteen acceptance criteria and prints one line per criterion:
//   PASS <n> <name> (<seconds> s, budget <budget> s)
// A criterion passes when every check holds and it finishes within its budget.
// Optional arguments select criteria by number.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "lindstedt/errors.hpp"
#include "lindstedt_cli/config.hpp"
#include "lindstedt_cli/suites.hpp"

using namespace lindstedt;
using namespace lindstedt::cli;

namespace {

struct Outcome {
  bool ok = true;
  std::string message;

  void add(const SuiteResult& r, const std::string& label = "") {
    if (r.ok) return;
    if (ok) message = (label.empty() ? r.name : label) + ": " + r.message;
    ok = false;
  }
};

struct Criterion {
  int id;
  const char* name;
  double budget;
  std::function<Outcome()> run;
};

RunConfig base(int D = 2) {
  RunConfig c = default_config(D);
  c.arithmetic = Arithmetic::Rational;
  return c;
}

Outcome leading_amplitude() {
  Outcome o;
  const struct {
    int D;
    double s;
  } cases[] = {{2, 1.0}, {3, 1.0}, {2, 0.0}};
  for (const auto& cs : cases) {
    RunConfig c = base(cs.D);
    c.freq.s = cs.s;
    o.add(suite_leading_amplitude(c), "D=" + std::to_string(cs.D) + " s=" + std::to_string(static_cast<int>(cs.s)));
  }
  return o;
}

Outcome resonant_consistency() {
  Outcome o;
  RunConfig c = base();
  c.resonant = true;
  c.freq.mu = 0.0;
  o.add(suite_resonant_consistency(c));
  return o;
}

Outcome oracle() {
  Outcome o;
  RunConfig c = base();
  c.verify_k_max = 3;
  o.add(suite_oracle_equivalence(c));
  return o;
}

Outcome symmetry() {
  Outcome o;
  RunConfig c = base();
  c.verify_k_max = 3;
  o.add(suite_counterterm_symmetry(c));
  return o;
}

Outcome cancellation() {
  Outcome o;
  RunConfig c = base();
  c.random_trials = 100;
  o.add(suite_resonant_cancellation(c));
  return o;
}

Outcome bryuno() {
  Outcome o;
  RunConfig c = base();
  c.verify_k_max = 3;
  o.add(suite_bryuno(c));
  return o;
}

Outcome clusters() {
  Outcome o;
  RunConfig c2 = base(2);
  c2.clusters_p_max = 10000;
  o.add(suite_cluster_invariants(c2), "D=2");
  RunConfig c3 = base(3);
  c3.clusters_p_max = 2000;
  o.add(suite_cluster_invariants(c3), "D=3");
  return o;
}

Outcome bourgain() {
  Outcome o;
  RunConfig c = base(2);
  c.bourgain_radius = 20.0;
  o.add(suite_bourgain(c));
  return o;
}

Outcome loop_lemma() {
  Outcome o;
  for (int N : {1, 2}) {
    RunConfig c = base();
    c.N = N;
    o.add(suite_loop_lemma(c), "N=" + std::to_string(N));
  }
  return o;
}

Outcome residual_scaling() {
  Outcome o;
  RunConfig c = base();
  c.K = 2;
  c.eta_min = 1e-4;
  c.eta_max = 1e-2;
  o.add(suite_residual_scaling(c, 0.2));
  return o;
}

Outcome measure_trend() {
  Outcome o;
  RunConfig c = base();
  c.eps_grid = {0.1, 0.05, 0.01};
  c.grid_size = 10000;
  o.add(suite_measure_trend(c));
  return o;
}

Outcome partition_of_unity() {
  Outcome o;
  RunConfig c = base();
  c.grid_size = 10000;
  o.add(suite_partition_of_unity(c), "rational");
  c.arithmetic = Arithmetic::Float;
  o.add(suite_partition_of_unity(c), "float");
  return o;
}

Outcome derivatives() {
  Outcome o;
  RunConfig c = base();
  c.random_trials = 100;
  o.add(suite_derivative_identities(c));
  return o;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "leading_amplitude", 1.0, leading_amplitude},
      {2, "resonant_consistency", 1.0, resonant_consistency},
      {3, "oracle_equivalence", 300.0, oracle},
      {4, "counterterm_symmetry", 60.0, symmetry},
      {5, "resonant_cancellation", 60.0, cancellation},
      {6, "bryuno_bound", 600.0, bryuno},
      {7, "cluster_lemma", 120.0, clusters},
      {8, "bourgain_partition", 60.0, bourgain},
      {9, "loop_lemma", 120.0, loop_lemma},
      {10, "residual_scaling", 120.0, residual_scaling},
      {11, "measure_trend", 120.0, measure_trend},
      {12, "partition_of_unity", 10.0, partition_of_unity},
      {13, "derivative_identities", 30.0, derivatives},
  };
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) {
    try {
      pick.insert(std::stoi(argv[i]));
    } catch (const std::exception&) {
      std::cerr << "usage: " << argv[0] << " [criterion number ...]\n";
      return 2;
    }
  }

  int failed = 0;
  for (const Criterion& cr : all) {
    if (!pick.empty() && !pick.count(cr.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.message = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.ok && secs > cr.budget) {
      o.ok = false;
      o.message = "over the time budget";
    }
    if (!o.ok) ++failed;
    std::cout << (o.ok ? "PASS " : "FAIL ") << cr.id << " " << cr.name << " (" << fmt(secs) << " s, budget "
              << cr.budget << " s)";
    if (!o.ok) std::cout << ": " << o.message;
    std::cout << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
