#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lindstedt/errors.hpp"
#include "lindstedt_cli/commands.hpp"
#include "lindstedt_cli/config.hpp"

namespace {

using nlohmann::json;
using lindstedt::cli::RunConfig;

enum class Kind { Int, Num, Bool, Str, NumList };

// Command line flags mirror the keys of the JSON configuration.
struct Flag {
  const char* name;
  const char* group;  // empty for top-level keys
  const char* key;
  Kind kind;
  const char* help;
};

const std::vector<Flag> kFlags = {
    {"D", "problem", "D", Kind::Int, "lattice dimension"},
    {"s", "problem", "s", Kind::Num, "smoothing exponent"},
    {"mu", "problem", "mu", Kind::Num, "mass"},
    {"resonant", "problem", "resonant", Kind::Bool, "zero-mass mode"},
    {"eps", "perturbation", "eps", Kind::Num, "frequency shift"},
    {"eps0", "perturbation", "eps0", Kind::Num, "largest admissible shift"},
    {"eps-grid", "perturbation", "eps_grid", Kind::NumList, "comma separated eps0 values for measure"},
    {"grid-size", "perturbation", "grid_size", Kind::Int, "points per sweep"},
    {"predicate", "perturbation", "predicate", Kind::Str, "sweep predicate"},
    {"gamma", "diophantine", "gamma", Kind::Num, "Melnikov constant"},
    {"gamma0", "diophantine", "gamma0", Kind::Num, "non-resonance constant of mu"},
    {"tau0", "diophantine", "tau0", Kind::Num, "non-resonance exponent of mu"},
    {"tau1", "diophantine", "tau1", Kind::Num, "first Melnikov exponent"},
    {"tau", "diophantine", "tau", Kind::Num, "second Melnikov exponent"},
    {"alpha", "diophantine", "alpha", Kind::Num, "cluster size exponent"},
    {"n-max", "diophantine", "n_max", Kind::Int, "largest n in Diophantine scans"},
    {"profile", "cutoff", "profile", Kind::Str, "bump profile: smoothstep or exp_bump"},
    {"clusters-p-max", "clusters", "p_max", Kind::Int, "largest sphere for clusters"},
    {"bourgain-radius", "bourgain", "radius", Kind::Num, "ball radius for the mode partition"},
    {"K", "series", "K", Kind::Int, "truncation order"},
    {"arithmetic", "series", "arithmetic", Kind::Str, "rational or float"},
    {"eta-min", "series", "eta_min", Kind::Num, "smallest eta of the residual scan"},
    {"eta-max", "series", "eta_max", Kind::Num, "largest eta of the residual scan"},
    {"eta-points", "series", "eta_points", Kind::Int, "points of the residual scan"},
    {"reconstruct-points", "series", "reconstruct_points", Kind::Int, "grid points per axis"},
    {"ct-n-max", "counterterms", "n_max", Kind::Int, "largest n of the symmetry check"},
    {"ct-wide-n-max", "counterterms", "wide_n_max", Kind::Int, "largest n for blocks with two or more members"},
    {"fixpoint-n-max", "counterterms", "fixpoint_n_max", Kind::Int, "largest n iterated by the fixpoint"},
    {"fixpoint-max-iter", "counterterms", "max_iter", Kind::Int, "fixpoint iteration cap"},
    {"K2", "counterterms", "K2", Kind::Num, "counterterm bound |M| <= K2 eps"},
    {"bryuno-c", "bryuno", "c", Kind::Num, "line count constant"},
    {"k-max", "verify", "k_max", Kind::Int, "largest order in verify"},
    {"inject-asymmetry", "verify", "inject_asymmetry", Kind::Bool, "corrupt one counterterm"},
    {"random-trials", "verify", "random_trials", Kind::Int, "random instances per randomized suite"},
    {"N", "packet", "N", Kind::Int, "packet size"},
    {"r", "packet", "r_min", Kind::Num, "smallest |m_1| of the packet search"},
    {"r-max", "packet", "r_max", Kind::Num, "largest |m_1| of the packet search"},
    {"alphas", "packet", "alphas", Kind::NumList, "comma separated shell limits alpha_2..alpha_N"},
    {"block-bound", "packet", "block_bound", Kind::Int, "largest admissible J block"},
    {"block-window", "packet", "block_window", Kind::Int, "largest |m|^2 scanned for blocks"},
    {"chains", "packet", "chains", Kind::Int, "sampled chains"},
    {"chain-length", "packet", "chain_length", Kind::Int, "longest sampled chain"},
    {"s-min", "packet", "s_min", Kind::Num, "determinant scan start"},
    {"s-max", "packet", "s_max", Kind::Num, "determinant scan end"},
    {"s-points", "packet", "s_points", Kind::Int, "determinant scan points"},
    {"seed", "", "seed", Kind::Int, "random seed"},
    {"output-dir", "", "output_dir", Kind::Str, "artifact directory"},
};

json convert(const Flag& f, const std::string& v) {
  try {
    switch (f.kind) {
      case Kind::Int: {
        std::size_t used = 0;
        const long x = std::stol(v, &used);
        if (used != v.size()) break;
        return x;
      }
      case Kind::Num: {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) break;
        return x;
      }
      case Kind::Bool:
        return true;
      case Kind::Str:
        return v;
      case Kind::NumList: {
        json arr = json::array();
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ','))
          if (!item.empty()) arr.push_back(std::stod(item));
        return arr;
      }
    }
  } catch (const std::exception&) {
  }
  throw lindstedt::ConfigError("flags", std::string("invalid value '") + v + "' for --" + f.name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lindstedt series, counterterms and bifurcation analysis for the periodic NLS problem"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON configuration file");
  std::vector<std::string> values(kFlags.size());
  std::vector<CLI::Option*> opts(kFlags.size());
  for (std::size_t i = 0; i < kFlags.size(); ++i) {
    const std::string name = std::string("--") + kFlags[i].name;
    if (kFlags[i].kind == Kind::Bool) opts[i] = app.add_flag(name, kFlags[i].help);
    else opts[i] = app.add_option(name, values[i], kFlags[i].help);
  }
  const std::map<std::string, int (*)(const RunConfig&, std::ostream&)> commands = {
      {"solve", lindstedt::cli::cmd_solve},
      {"verify", lindstedt::cli::cmd_verify},
      {"measure", lindstedt::cli::cmd_measure},
      {"clusters", lindstedt::cli::cmd_clusters},
      {"bifurcate", lindstedt::cli::cmd_bifurcate},
  };
  const std::map<std::string, std::string> help = {
      {"solve", "clusters, counterterm fixpoint, q equation, coefficients, residual and reconstruction"},
      {"verify", "property suites with a pass/fail report"},
      {"measure", "acceptance fractions of the Diophantine conditions over eps0"},
      {"clusters", "sphere clusters and the mode partition"},
      {"bifurcate", "wave packet, amplitudes, J blocks and the determinant scan"},
  };
  for (const auto& [name, fn] : commands) app.add_subcommand(name, help.at(name))->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    json j = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw lindstedt::ConfigError("config", "cannot open '" + config_path + "'");
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw lindstedt::ConfigError("config", "'" + config_path + "' is not valid JSON: " + e.what());
      }
      if (!j.is_object()) throw lindstedt::ConfigError("config", "the configuration must be a JSON object");
    }
    for (std::size_t i = 0; i < kFlags.size(); ++i) {
      if (opts[i]->count() == 0) continue;
      const Flag& f = kFlags[i];
      const json v = convert(f, values[i]);
      if (*f.group) j[f.group][f.key] = v;
      else j[f.key] = v;
    }
    const RunConfig cfg = lindstedt::cli::parse_config(j);
    for (const auto& [name, fn] : commands)
      if (app.got_subcommand(name)) return fn(cfg, std::cout);
    return 2;
  } catch (const lindstedt::Error& e) {
    std::cerr << "lindstedt: " << e.what() << "\n";
    return e.is_config_error() ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "lindstedt: internal: " << e.what() << "\n";
    return 1;
  }
}
