#include "lindstedt_cli/commands.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "lindstedt/bifurcation.hpp"
#include "lindstedt/errors.hpp"
#include "lindstedt/series.hpp"
#include "lindstedt_cli/suites.hpp"

namespace lindstedt::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double x) {
  if (x == 0.0) x = 0.0;  // drop the sign of negative zero
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

fs::path prepare_dir(const RunConfig& c) {
  const fs::path dir = output_dir(c);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("output", "cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw ConfigError("output", "cannot write '" + p.string() + "'");
  return f;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream f = open_out(p);
  f << j.dump(2) << "\n";
}

std::string mode_columns(int D) {
  std::string s;
  for (int i = 1; i <= D; ++i) s += ",m" + std::to_string(i);
  return s;
}

std::string mode_values(const IVec& m, int D) {
  std::string s;
  for (int i = 0; i < D; ++i) s += "," + std::to_string(m[i]);
  return s;
}

json witness_json(const DiophantineWitness& w) {
  return {{"ok", w.ok}, {"n", w.n}, {"p", w.p}, {"margin", w.margin}};
}

// Samples of the truncated solution on the grid t in {0, pi/2}, x in [0, pi]^D.
void write_reconstruction(const fs::path& p, const Coefficients<double>& u, double q0, const RunConfig& c) {
  const int D = c.freq.D;
  const int P = c.reconstruct_points;
  std::ofstream f = open_out(p);
  f << "t";
  for (int i = 1; i <= D; ++i) f << ",x" << i;
  f << ",u,leading\n";
  std::vector<int> idx(D, 0);
  for (double t : {0.0, std::numbers::pi / 2}) {
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      std::vector<double> x(D);
      double prod = 1.0;
      for (int i = 0; i < D; ++i) {
        x[i] = std::numbers::pi * idx[i] / (P - 1);
        prod *= std::sin(x[i]);
      }
      f << format_double(t);
      for (double xi : x) f << "," << format_double(xi);
      f << "," << format_double(reconstruct(u, x, t, D)) << "," << format_double(q0 * std::cos(t) * prod) << "\n";
      int i = 0;
      while (i < D && ++idx[i] == P) idx[i++] = 0;
      if (i == D) break;
    }
  }
}

json residual_json(const ResidualReport& r) {
  json samples = json::array();
  for (const ResidualSample& s : r.samples)
    samples.push_back({{"eta", s.eta},
                       {"q", s.q},
                       {"max_residual", s.max_residual},
                       {"max_kernel_residual", s.max_kernel_residual},
                       {"modes", s.modes}});
  return {{"K", r.K}, {"slope", r.slope}, {"expected_slope", r.K + 1}, {"samples", samples}};
}

template <class T>
void write_coefficients(const fs::path& p, const std::vector<Coefficients<T>>& orders, int D, bool exact) {
  std::ofstream f = open_out(p);
  f << "k,n" << mode_columns(D) << ",value";
  if (exact) f << ",numerator,denominator";
  f << "\n";
  for (std::size_t k = 0; k < orders.size(); ++k)
    for (const auto& [key, v] : orders[k]) {
      if (is_zero(v)) continue;
      f << k << "," << key.first << mode_values(key.second, D) << ",";
      if constexpr (is_exact_v<T>) {
        f << format_double(v.get_d()) << "," << v.get_num().get_str() << "," << v.get_den().get_str();
      } else {
        f << format_double(v);
      }
      f << "\n";
    }
}

int solve_nonresonant(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  const FrequencyContext& f = c.freq;
  const auto cat = c.catalog();
  const CutoffSpec cut = c.cutoff();
  json summary;
  summary["config"] = to_json(c);

  const DiophantineWitness mu = check_mu_nonresonant(f.mu, f.gamma0, f.tau0, f.n_max, f.D);
  summary["mu_nonresonance"] = witness_json(mu);
  if (!mu.ok)
    throw MelnikovFailure("mu_nonresonance", "mu = " + format_double(f.mu) + " fails the strong non-resonance test at n=" +
                                                 std::to_string(mu.n) + " (use the resonant mode for mu = 0)");
  const DiophantineWitness mel = check_melnikov_first(f.eps, f);
  summary["first_melnikov"] = witness_json(mel);
  if (!mel.ok)
    throw MelnikovFailure("first_melnikov", "eps = " + format_double(f.eps) + " fails at n=" + std::to_string(mel.n) +
                                                " p=" + std::to_string(mel.p));
  out << "first Melnikov condition: ok\n";

  if (c.K == 0) {
    const QSolution qs = solve_q(0.0, 0, f, cut, cat);
    summary["q"] = qs.q;
    if (qs.q_squared) summary["q_squared"] = to_string(*qs.q_squared);
    write_reconstruction(dir / "reconstruction.csv", leading_coefficients<double>(f.D, qs.q), qs.q, c);
    write_json(dir / "solve.json", summary);
    out << "K = 0: leading solution q0 = " << format_double(qs.q) << "\n";
    return 0;
  }

  FixpointOptions fo;
  fo.max_iter = c.fixpoint_max_iter;
  fo.tol = c.fixpoint_tol;
  fo.K2 = c.K2;
  fo.n_max = c.fixpoint_n_max;
  const FixpointReport fx = compatibility_fixpoint(f.eps, c.K, f, cut, cat, fo);
  long nonzero_blocks = 0;
  for (const auto& [key, M] : fx.M)
    if (!M.is_zero()) ++nonzero_blocks;
  summary["fixpoint"] = {{"iterations", fx.iterations}, {"blocks", fx.M.size()},   {"nonzero_blocks", nonzero_blocks},
                         {"steps", fx.steps},          {"ratios", fx.ratios},      {"norm", fx.norm},
                         {"bound", fx.bound}};
  out << "compatibility fixpoint: " << fx.iterations << " iterations, " << fx.M.size() << " blocks, |M| = "
      << format_double(fx.norm) << "\n";
  const auto Mmap = fx.M;
  const BlockField<double> M = [Mmap](long n, const ClusterRef& j) {
    const auto it = Mmap.find({n, j});
    return it == Mmap.end() ? Matrix<double>() : it->second;
  };

  const QSolution qs = solve_q(f.eps, c.K, f, cut, cat, M);
  summary["q"] = {{"value", qs.q}, {"iterations", qs.iterations}, {"residual", qs.residual}};
  out << "q equation: q = " << format_double(qs.q) << " after " << qs.iterations << " iterations\n";

  Coefficients<double> truncated;
  if (c.arithmetic == Arithmetic::Rational) {
    // Without counterterms order k is q^{2k+1} times a rational, so the exact coefficients are
    // taken at q = 1. Otherwise they are taken at the dyadic value of the solved q.
    const bool unit_q = fx.norm == 0.0;
    const Rational q_exact = unit_q ? Rational(1) : exact(qs.q);
    ExpansionContext<Rational> ctx(f, cut, cat, q_exact);
    ctx.set_counterterms([Mmap](long n, const ClusterRef& j) {
      const auto it = Mmap.find({n, j});
      return it == Mmap.end() ? Matrix<Rational>() : to_exact(it->second);
    });
    TreeExpansion<Rational> te(ctx, TreeMode::Renormalized, nullptr, c.K);
    CountertermTable<Rational> table([&](int k, long n, const ClusterRef& j) { return te.family_sums(k, n, j); },
                                     [&](long n, const ClusterRef& j) { return ctx.in_omega(n, j); }, f.D);
    RecursionOracle<Rational> oracle(ctx, &table);
    const SeriesSolution<Rational> sol = oracle.solve(c.K);
    write_coefficients(dir / "coefficients.csv", sol.orders, f.D, true);
    double eta_k = 1.0, qpow = unit_q ? qs.q : 1.0;
    for (int k = 0; k <= c.K; ++k) {
      for (const auto& [key, v] : sol.orders[k]) truncated[key] += eta_k * qpow * v.get_d();
      eta_k *= f.eps;
      if (unit_q) qpow *= qs.q * qs.q;
    }
    summary["coefficients"] = {{"arithmetic", "rational"},
                               {"scaling", unit_q ? "order k is multiplied by q^(2k+1) eps^k"
                                                  : "order k is multiplied by eps^k (evaluated at the dyadic q)"}};
  } else {
    ExpansionContext<double> ctx(f, cut, cat, qs.q);
    ctx.set_counterterms(M);
    TreeExpansion<double> te(ctx, TreeMode::Renormalized, nullptr, c.K);
    CountertermTable<double> table([&](int k, long n, const ClusterRef& j) { return te.family_sums(k, n, j); },
                                   [&](long n, const ClusterRef& j) { return ctx.in_omega(n, j); }, f.D);
    RecursionOracle<double> oracle(ctx, &table);
    const SeriesSolution<double> sol = oracle.solve(c.K);
    write_coefficients(dir / "coefficients.csv", sol.orders, f.D, false);
    truncated = sol.truncated(f.eps);
    summary["coefficients"] = {{"arithmetic", "float"}, {"scaling", "order k is multiplied by eps^k"}};
  }
  write_reconstruction(dir / "reconstruction.csv", truncated, qs.q, c);

  const ResidualReport rr = residual_scan(log_grid(c.eta_min, c.eta_max, c.eta_points), c.K, f, cut, cat);
  write_json(dir / "residual.json", residual_json(rr));
  out << "residual slope: " << format_double(rr.slope) << " (truncation order " << c.K << ")\n";
  summary["residual_slope"] = rr.slope;
  int code = 0;
  // Beyond second order the residual reaches the double precision floor inside the eta window.
  if (c.K <= 2 && std::fabs(rr.slope - (c.K + 1)) > 0.2) {
    out << "residual: slope differs from " << c.K + 1 << "\n";
    summary["failed_stage"] = "residual";
    code = 1;
  }
  write_json(dir / "solve.json", summary);
  return code;
}

int solve_resonant(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  const FrequencyContext& f = c.freq;
  json summary;
  summary["config"] = to_json(c);
  const DiophantineWitness w = check_resonant_divisors(f.eps, f);
  summary["resonant_divisors"] = witness_json(w);
  if (!w.ok)
    throw MelnikovFailure("resonant_divisors", "eps = " + format_double(f.eps) + " fails at n=" + std::to_string(w.n) +
                                                   " p=" + std::to_string(w.p));
  PacketOptions po;
  po.N = c.N;
  po.D = f.D;
  po.s = f.s;
  po.alphas = c.alphas;
  po.r_min = c.r_min;
  po.r_max = c.r_max;
  const PacketSet P = construct_packet(po);
  const Amplitudes amp = amplitudes(P);
  const BifurcationResidual br = bifurcation_residual(P, amp);
  if (!br.zero) throw InvariantViolation("bifurcation_equation", "leading field does not solve the bifurcation equation");
  out << "packet of " << P.N() << " modes, A^2 = " << format_double(amp.A2) << "\n";
  summary["A2"] = amp.A2;
  if (amp.A2_exact) summary["A2_exact"] = to_string(*amp.A2_exact);

  if (c.K == 0) {
    write_reconstruction(dir / "reconstruction.csv", resonant_series(P, amp, f.eps, 0).orders[0],
                         std::sqrt(amp.A2), c);
    write_json(dir / "solve.json", summary);
    return 0;
  }
  const ResonantSeries rs = resonant_series(P, amp, f.eps, c.K, static_cast<std::size_t>(c.block_bound));
  write_coefficients(dir / "coefficients.csv", rs.orders, f.D, false);
  Coefficients<double> truncated;
  double eta_k = 1.0;
  for (const auto& o : rs.orders) {
    for (const auto& [key, v] : o) truncated[key] += eta_k * v;
    eta_k *= f.eps;
  }
  write_reconstruction(dir / "reconstruction.csv", truncated, std::sqrt(amp.A2), c);
  summary["blocks_solved"] = rs.blocks_solved;
  summary["largest_block"] = rs.largest_block;

  ResidualReport rr;
  rr.K = c.K;
  std::vector<double> x, y;
  for (double eta : log_grid(c.eta_min, c.eta_max, c.eta_points)) {
    const ResidualSample s = resonant_residual(P, amp, eta, c.K);
    rr.samples.push_back(s);
    x.push_back(eta);
    y.push_back(std::max(s.max_residual, s.max_kernel_residual));
  }
  rr.slope = loglog_slope(x, y);
  write_json(dir / "residual.json", residual_json(rr));
  out << "residual slope: " << format_double(rr.slope) << " (truncation order " << c.K << ")\n";
  summary["residual_slope"] = rr.slope;
  int code = 0;
  if (c.K <= 2 && std::fabs(rr.slope - (c.K + 1)) > 0.2) {
    summary["failed_stage"] = "residual";
    code = 1;
  }
  write_json(dir / "solve.json", summary);
  return code;
}

int report_suites(const std::vector<SuiteResult>& rs, const fs::path& file, std::ostream& out) {
  json arr = json::array();
  bool ok = true;
  for (const SuiteResult& r : rs) {
    arr.push_back(to_json(r));
    ok = ok && r.ok;
    out << (r.ok ? "PASS " : "FAIL ") << r.name << " (" << format_double(std::round(r.seconds * 100) / 100) << " s)";
    if (!r.ok) out << " [" << r.stage << "] " << r.message;
    out << "\n";
  }
  write_json(file, {{"ok", ok}, {"suites", arr}});
  return ok ? 0 : 1;
}

}  // namespace

int cmd_solve(const RunConfig& c, std::ostream& out) {
  validate(c);
  const fs::path dir = prepare_dir(c);
  return c.resonant ? solve_resonant(c, dir, out) : solve_nonresonant(c, dir, out);
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
  validate(c);
  const fs::path dir = prepare_dir(c);
  return report_suites(run_verify_suites(c), dir / "verify.json", out);
}

int cmd_measure(const RunConfig& c, std::ostream& out) {
  validate(c);
  if (c.eps_grid.empty()) throw ConfigError("measure", "the eps0 grid is empty");
  const fs::path dir = prepare_dir(c);
  const std::string pred = c.resonant ? "resonant" : c.measure_predicate;
  std::vector<double> grid = c.eps_grid;
  std::sort(grid.rbegin(), grid.rend());
  std::ofstream sweep = open_out(dir / "sweep.csv");
  std::ofstream excl = open_out(dir / "excluded.csv");
  sweep << "eps0,grid_size,fraction,excluded_intervals\n";
  excl << "eps0,lo,hi\n";
  json series = json::array();
  bool monotone = true;
  double prev = -1.0;
  for (double eps0 : grid) {
    FrequencyContext f = c.freq;
    f.eps0 = eps0;
    const SweepResult s = measure_sweep(eps0, c.grid_size, named_predicate(pred, f));
    sweep << format_double(eps0) << "," << s.grid_size << "," << format_double(s.fraction) << "," << s.excluded.size()
          << "\n";
    for (const auto& [lo, hi] : s.excluded) excl << format_double(eps0) << "," << format_double(lo) << "," << format_double(hi) << "\n";
    series.push_back({{"eps0", eps0}, {"fraction", s.fraction}});
    if (s.fraction < prev) monotone = false;
    prev = s.fraction;
    out << "eps0 = " << format_double(eps0) << ": fraction " << format_double(s.fraction) << "\n";
  }
  write_json(dir / "measure.json", {{"predicate", pred}, {"grid_size", c.grid_size}, {"series", series},
                                    {"non_decreasing_as_eps0_shrinks", monotone}});
  return 0;
}

int cmd_clusters(const RunConfig& c, std::ostream& out) {
  validate(c);
  const fs::path dir = prepare_dir(c);
  const int D = c.freq.D;
  {
    std::ofstream f = open_out(dir / "clusters.csv");
    f << "p,j,d,diam,min_separation,members\n";
    for (long p = 1; p <= c.clusters_p_max; ++p) {
      const std::vector<IVec> pts = enumerate_sphere(p, D);
      if (pts.empty()) continue;
      for (const SphereCluster& s : cluster_sphere(pts, c.clusters, D)) {
        f << p << "," << s.j << "," << s.d() << "," << format_double(s.diam) << "," << format_double(s.min_separation)
          << ",";
        for (std::size_t i = 0; i < s.members.size(); ++i) {
          if (i) f << ";";
          for (int a = 0; a < D; ++a) f << (a ? ":" : "") << s.members[i][a];
        }
        f << "\n";
      }
    }
  }
  return report_suites({suite_cluster_invariants(c), suite_bourgain(c)}, dir / "clusters.json", out);
}

int cmd_bifurcate(const RunConfig& c, std::ostream& out) {
  validate(c);
  const fs::path dir = prepare_dir(c);
  PacketOptions po;
  po.N = c.N;
  po.D = c.freq.D;
  po.s = c.freq.s;
  po.alphas = c.alphas;
  po.r_min = c.r_min;
  po.r_max = c.r_max;
  const PacketSet P = construct_packet(po);
  const PacketCheck chk = check_packet(P);
  const Amplitudes amp = amplitudes(P);
  const BifurcationResidual br = bifurcation_residual(P, amp);
  const BifurcationResidual ar = amplitude_residual(P, amp);
  const JOperator J(P, amp);
  const long head = head_block_bound(P, amp.A2);
  const BlockPartition bp = find_blocks(J, std::min(head, c.block_window), static_cast<std::size_t>(c.block_bound));
  std::vector<double> grid;
  for (int i = 0; i < c.s_points; ++i)
    grid.push_back(c.s_points == 1 ? c.s_min : c.s_min + (c.s_max - c.s_min) * i / (c.s_points - 1));
  const DetScan ds = scan_J11(P, grid, std::min(head, c.block_window));

  json members = json::array();
  for (std::size_t i = 0; i < P.members.size(); ++i) {
    json m = json::array();
    for (int a = 0; a < P.D; ++a) m.push_back(P.members[i][a]);
    json e = {{"m", m}, {"norm2", norm2(P.members[i])}, {"a", amp.a[i]}, {"a2", amp.a2[i]}};
    if (i < amp.a2_exact.size()) e["a2_exact"] = to_string(amp.a2_exact[i]);
    members.push_back(e);
  }
  json report = {{"D", P.D},
                 {"s", P.s},
                 {"N", P.N()},
                 {"r", P.r},
                 {"alphas", P.alphas},
                 {"members", members},
                 {"conditions_ok", chk.ok},
                 {"A2", amp.A2},
                 {"bifurcation_residual", {{"exact", br.exact}, {"zero", br.zero}, {"max_abs", br.max_abs}}},
                 {"amplitude_residual", {{"exact", ar.exact}, {"zero", ar.zero}, {"max_abs", ar.max_abs}}},
                 {"head_block_bound", head},
                 {"blocks", {{"count", bp.blocks.size()},
                             {"max_size", bp.max_size},
                             {"bound", bp.bound},
                             {"offblock_zero", bp.offblock_zero},
                             {"log10_K", std::isfinite(bp.log10_K) ? json(bp.log10_K) : json("inf")}}},
                 {"determinant", {{"zero_crossings", ds.zero_crossings}, {"identically_zero", ds.identically_zero}}}};
  if (amp.A2_exact) report["A2_exact"] = to_string(*amp.A2_exact);
  if (!chk.ok) report["condition_failure"] = chk.failure;
  write_json(dir / "packet.json", report);
  {
    std::ofstream f = open_out(dir / "determinants.csv");
    f << "s,sign,log10_abs_det,log10_abs_diag,ratio,size\n";
    for (const DetSample& s : ds.samples)
      f << format_double(s.s) << "," << s.sign << "," << format_double(s.log10_abs_det) << ","
        << format_double(s.log10_abs_diag) << "," << format_double(s.ratio) << "," << s.size << "\n";
  }
  out << "packet:";
  for (const IVec& m : P.members) out << " " << to_string(m, P.D);
  out << "\nA^2 = " << (amp.A2_exact ? to_string(*amp.A2_exact) : format_double(amp.A2)) << "\n";
  out << "blocks: " << bp.blocks.size() << ", largest " << bp.max_size << " (bound " << bp.bound << ")\n";
  out << "det J11: " << ds.zero_crossings.size() << " sign changes over the s grid"
      << (ds.identically_zero ? ", vanishes identically" : "") << "\n";
  const bool ok = chk.ok && br.zero && ar.zero && bp.offblock_zero && bp.max_size <= bp.bound && !ds.identically_zero;
  return ok ? 0 : 1;
}

}  // namespace lindstedt::cli
