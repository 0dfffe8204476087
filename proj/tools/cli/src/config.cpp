#include "lindstedt_cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "lindstedt/errors.hpp"

namespace lindstedt::cli {

using nlohmann::json;

CutoffSpec RunConfig::cutoff() const {
  CutoffSpec c;
  c.gamma = freq.gamma;
  c.profile = profile;
  c.resonant = resonant;
  return c;
}

std::shared_ptr<ClusterCatalog> RunConfig::catalog() const {
  return std::make_shared<ClusterCatalog>(freq.D, clusters);
}

RunConfig default_config(int D) {
  RunConfig c;
  c.freq.D = D;
  c.freq.tau = c.freq.tau0 + 1.5 + D;
  c.clusters = ClusterConstants::defaults(D, c.freq.alpha);
  c.bourgain = BourgainConstants::defaults(D, c.freq.alpha);
  c.bryuno_beta = c.clusters.beta;
  if (D != 2) {
    c.clusters_p_max = 2000;
    c.bourgain_radius = 8.0;
  }
  return c;
}

namespace {

class Group {
 public:
  Group(const json& root, const std::string& name) : name_(name) {
    if (!root.contains(name)) return;
    obj_ = &root.at(name);
    if (!obj_->is_object()) throw ConfigError("config", "'" + name + "' must be an object");
  }
  ~Group() noexcept(false) {
    if (!obj_ || std::uncaught_exceptions()) return;
    for (auto it = obj_->begin(); it != obj_->end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("config", "unknown key '" + name_ + "." + it.key() + "'");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!obj_ || !obj_->contains(key)) return;
    const json& v = obj_->at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("config", "'" + name_ + "." + key + "' must be a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("config", "'" + name_ + "." + key + "' must be an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("config", "'" + name_ + "." + key + "' must be a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("config", "'" + name_ + "." + key + "' must be a string");
      } else {
        if (!v.is_array()) throw ConfigError("config", "'" + name_ + "." + key + "' must be an array");
        for (const json& x : v)
          if (!x.is_number()) throw ConfigError("config", "'" + name_ + "." + key + "' must hold numbers");
      }
      out = v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config", "'" + name_ + "." + key + "': " + e.what());
    }
  }
  bool present(const std::string& key) const { return obj_ && obj_->contains(key); }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::set<std::string> seen_;
};

const std::set<std::string> kGroups = {"problem", "perturbation", "diophantine", "cutoff", "clusters", "bourgain",
                                       "series", "counterterms", "bryuno", "verify", "packet", "seed", "output_dir"};

}  // namespace

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config", "the configuration must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!kGroups.count(it.key())) throw ConfigError("config", "unknown key '" + it.key() + "'");
  int D = 2;
  if (j.contains("problem") && j.at("problem").is_object() && j.at("problem").contains("D")) {
    if (!j.at("problem").at("D").is_number_integer()) throw ConfigError("config", "'problem.D' must be an integer");
    D = j.at("problem").at("D").get<int>();
  }
  if (D < 2 || D > kMaxDim) throw ConfigError("config", "problem.D must lie in [2, " + std::to_string(kMaxDim) + "]");
  RunConfig c = default_config(D);
  {
    Group g(j, "problem");
    g.get("D", c.freq.D);
    g.get("s", c.freq.s);
    g.get("mu", c.freq.mu);
    g.get("resonant", c.resonant);
  }
  {
    Group g(j, "perturbation");
    g.get("eps", c.freq.eps);
    g.get("eps0", c.freq.eps0);
    g.get("eps_grid", c.eps_grid);
    g.get("grid_size", c.grid_size);
    g.get("predicate", c.measure_predicate);
  }
  {
    Group g(j, "diophantine");
    g.get("gamma", c.freq.gamma);
    g.get("gamma0", c.freq.gamma0);
    g.get("tau0", c.freq.tau0);
    g.get("tau1", c.freq.tau1);
    g.get("tau", c.freq.tau);
    g.get("alpha", c.freq.alpha);
    g.get("n_max", c.freq.n_max);
  }
  {
    Group g(j, "cutoff");
    std::string profile = bump_name(c.profile);
    g.get("profile", profile);
    c.profile = parse_bump(profile);
  }
  {
    Group g(j, "clusters");
    g.get("alpha", c.clusters.alpha);
    g.get("beta", c.clusters.beta);
    g.get("C1", c.clusters.C1);
    g.get("C2", c.clusters.C2);
    g.get("max_size", c.clusters.max_size);
    g.get("p_max", c.clusters_p_max);
  }
  {
    Group g(j, "bourgain");
    g.get("alpha", c.bourgain.alpha);
    g.get("beta", c.bourgain.beta);
    g.get("C1", c.bourgain.C1);
    g.get("C2", c.bourgain.C2);
    g.get("radius", c.bourgain_radius);
  }
  {
    Group g(j, "series");
    g.get("K", c.K);
    std::string a = c.arithmetic == Arithmetic::Rational ? "rational" : "float";
    g.get("arithmetic", a);
    if (a == "rational") c.arithmetic = Arithmetic::Rational;
    else if (a == "float") c.arithmetic = Arithmetic::Float;
    else throw ConfigError("config", "series.arithmetic must be 'rational' or 'float'");
    g.get("eta_min", c.eta_min);
    g.get("eta_max", c.eta_max);
    g.get("eta_points", c.eta_points);
    g.get("reconstruct_points", c.reconstruct_points);
  }
  {
    Group g(j, "counterterms");
    g.get("n_max", c.symmetry_n_max);
    g.get("wide_n_max", c.symmetry_wide_n_max);
    g.get("fixpoint_n_max", c.fixpoint_n_max);
    g.get("max_iter", c.fixpoint_max_iter);
    g.get("tol", c.fixpoint_tol);
    g.get("K2", c.K2);
  }
  {
    Group g(j, "bryuno");
    g.get("c", c.bryuno_c);
    g.get("beta", c.bryuno_beta);
  }
  {
    Group g(j, "verify");
    g.get("k_max", c.verify_k_max);
    g.get("inject_asymmetry", c.inject_asymmetry);
    g.get("random_trials", c.random_trials);
  }
  {
    Group g(j, "packet");
    g.get("N", c.N);
    g.get("r_min", c.r_min);
    g.get("r_max", c.r_max);
    g.get("alphas", c.alphas);
    g.get("block_bound", c.block_bound);
    g.get("block_window", c.block_window);
    g.get("chains", c.chains);
    g.get("chain_length", c.chain_length);
    g.get("s_min", c.s_min);
    g.get("s_max", c.s_max);
    g.get("s_points", c.s_points);
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError("config", "'seed' must be a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ConfigError("config", "'output_dir' must be a string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  validate(c);
  return c;
}

void validate(const RunConfig& c) {
  c.freq.validate();
  auto bad = [](const std::string& why) { throw ConfigError("config", why); };
  if (c.K < 0 || c.K > 5) bad("series.K must lie in [0, 5]");
  if (!(c.eta_min > 0 && c.eta_max > c.eta_min)) bad("series.eta_min/eta_max must satisfy 0 < eta_min < eta_max");
  if (c.eta_points < 2) bad("series.eta_points must be at least 2");
  if (c.reconstruct_points < 2) bad("series.reconstruct_points must be at least 2");
  if (c.grid_size < 1) bad("perturbation.grid_size must be positive");
  for (double e : c.eps_grid)
    if (!(e > 0)) bad("perturbation.eps_grid entries must be positive");
  if (c.verify_k_max < 1 || c.verify_k_max > 5) bad("verify.k_max must lie in [1, 5]");
  if (c.N < 1) bad("packet.N must be positive");
  if (c.s_points < 1 || !(c.s_max >= c.s_min)) bad("packet s grid is empty");
  if (c.block_bound < 1) bad("packet.block_bound must be positive");
  if (!(c.clusters.C1 > 0 && c.clusters.C2 > 0)) bad("cluster constants must be positive");
  if (c.clusters_p_max < 1) bad("clusters.p_max must be positive");
  if (c.resonant && c.freq.mu != 0.0) bad("resonant mode requires mu = 0");
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config", "'" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json j;
  j["problem"] = {{"D", c.freq.D}, {"s", c.freq.s}, {"mu", c.freq.mu}, {"resonant", c.resonant}};
  j["perturbation"] = {{"eps", c.freq.eps},
                       {"eps0", c.freq.eps0},
                       {"eps_grid", c.eps_grid},
                       {"grid_size", c.grid_size},
                       {"predicate", c.measure_predicate}};
  j["diophantine"] = {{"gamma", c.freq.gamma}, {"gamma0", c.freq.gamma0}, {"tau0", c.freq.tau0},
                      {"tau1", c.freq.tau1},   {"tau", c.freq.tau},       {"alpha", c.freq.alpha},
                      {"n_max", c.freq.n_max}};
  j["cutoff"] = {{"profile", bump_name(c.profile)}};
  j["clusters"] = {{"alpha", c.clusters.alpha}, {"beta", c.clusters.beta},         {"C1", c.clusters.C1},
                   {"C2", c.clusters.C2},       {"max_size", c.clusters.max_size}, {"p_max", c.clusters_p_max}};
  j["bourgain"] = {{"alpha", c.bourgain.alpha},
                   {"beta", c.bourgain.beta},
                   {"C1", c.bourgain.C1},
                   {"C2", c.bourgain.C2},
                   {"radius", c.bourgain_radius}};
  j["series"] = {{"K", c.K},
                 {"arithmetic", c.arithmetic == Arithmetic::Rational ? "rational" : "float"},
                 {"eta_min", c.eta_min},
                 {"eta_max", c.eta_max},
                 {"eta_points", c.eta_points},
                 {"reconstruct_points", c.reconstruct_points}};
  j["counterterms"] = {{"n_max", c.symmetry_n_max},      {"wide_n_max", c.symmetry_wide_n_max},
                       {"fixpoint_n_max", c.fixpoint_n_max}, {"max_iter", c.fixpoint_max_iter},
                       {"tol", c.fixpoint_tol},          {"K2", c.K2}};
  j["bryuno"] = {{"c", c.bryuno_c}, {"beta", c.bryuno_beta}};
  j["verify"] = {{"k_max", c.verify_k_max}, {"inject_asymmetry", c.inject_asymmetry},
                 {"random_trials", c.random_trials}};
  j["packet"] = {{"N", c.N},
                 {"r_min", c.r_min},
                 {"r_max", c.r_max},
                 {"alphas", c.alphas},
                 {"block_bound", c.block_bound},
                 {"block_window", c.block_window},
                 {"chains", c.chains},
                 {"chain_length", c.chain_length},
                 {"s_min", c.s_min},
                 {"s_max", c.s_max},
                 {"s_points", c.s_points}};
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  return j;
}

std::string output_dir(const RunConfig& c) {
  if (const char* env = std::getenv("LINDSTEDT_OUTPUT_DIR"); env && *env) return env;
  return c.output_dir;
}

}  // namespace lindstedt::cli
