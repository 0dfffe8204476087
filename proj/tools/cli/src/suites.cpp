#include "lindstedt_cli/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <set>

#include "lindstedt/bifurcation.hpp"
#include "lindstedt/blocks.hpp"
#include "lindstedt/errors.hpp"
#include "lindstedt/series.hpp"
#include "lindstedt/trees.hpp"

namespace lindstedt::cli {

using nlohmann::json;

namespace {

// Runs body and turns exceptions into a failed result carrying the stage.
SuiteResult run_suite(const std::string& name, const std::function<void(SuiteResult&)>& body) {
  SuiteResult r;
  r.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const Error& e) {
    r.ok = false;
    r.stage = e.stage();
    r.message = e.what();
  } catch (const std::exception& e) {
    r.ok = false;
    r.stage = "internal";
    r.message = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

void fail(SuiteResult& r, const std::string& stage, const std::string& msg) {
  if (r.ok) {
    r.stage = stage;
    r.message = msg;
  }
  r.ok = false;
}

double finite_or_max(double x) { return std::isfinite(x) ? x : std::numeric_limits<double>::max(); }

Rational expected_q0_squared(int D, double s) {
  Rational r = real_pow<Rational>(D, s) / int_pow<Rational>(3, D);
  r.canonicalize();
  return r;
}

std::string mode_name(long n, const IVec& m, int D) { return "n=" + std::to_string(n) + " m=" + to_string(m, D); }

template <class T>
bool close(const T& a, const T& b) {
  if constexpr (is_exact_v<T>) {
    return a == b;
  } else {
    return std::fabs(a - b) <= 1e-10 * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
  }
}

template <class T>
bool matrix_symmetric(const Matrix<T>& M) {
  if constexpr (is_exact_v<T>) {
    return M == M.transpose();
  } else {
    return M.is_symmetric(1e-12 * std::max(1.0, inf_norm(M)));
  }
}

template <class T>
void oracle_equivalence(const RunConfig& c, SuiteResult& r) {
  const auto cat = c.catalog();
  // In exact mode the amplitude is 1: every coefficient of order k is q^{2k+1} times a rational.
  const T q = is_exact_v<T> ? T(1) : T(std::sqrt(leading_q_squared(c.freq.D, std::round(c.freq.s)).get_d()));
  ExpansionContext<T> ctx(c.freq, c.cutoff(), cat, q);
  RecursionOracle<T> oracle(ctx);
  TreeExpansion<T> te(ctx, TreeMode::Renormalized, nullptr, c.verify_k_max);
  json orders = json::array();
  for (int k = 1; k <= c.verify_k_max; ++k) {
    const Coefficients<T>& u = oracle.order(k);
    std::set<ModeKey> keys(te.support(k).begin(), te.support(k).end());
    for (const auto& kv : u) keys.insert(kv.first);
    long trees = 0, mismatches = 0, conservation = 0;
    for (const auto& [n, m] : keys) {
      T sum = T(0);
      te.for_each(k, n, m, [&](const LabelledTree& t) {
        ++trees;
        if (!check_conservation(t)) ++conservation;
        sum += evaluate_tree(t, ctx);
      });
      const auto it = u.find({n, m});
      const T o = it == u.end() ? T(0) : it->second;
      if (!close(sum, o)) {
        ++mismatches;
        fail(r, "oracle_equivalence", "order " + std::to_string(k) + " " + mode_name(n, m, c.freq.D) +
                                          ": tree sum " + to_string(sum) + " vs recursion " + to_string(o));
      }
    }
    if (conservation) fail(r, "tree_enumeration", std::to_string(conservation) + " trees break conservation");
    orders.push_back({{"k", k},
                      {"modes", keys.size()},
                      {"nonzero", u.size()},
                      {"trees", trees},
                      {"mismatches", mismatches}});
  }
  r.detail["orders"] = orders;
}

template <class T>
void counterterm_symmetry(const RunConfig& c, SuiteResult& r) {
  const auto cat = c.catalog();
  const T q = is_exact_v<T> ? T(1) : T(std::sqrt(leading_q_squared(c.freq.D, std::round(c.freq.s)).get_d()));
  ExpansionContext<T> ctx(c.freq, c.cutoff(), cat, q);
  TreeExpansion<T> te(ctx, TreeMode::Renormalized, nullptr, c.verify_k_max);
  CountertermTable<T> table([&](int k, long n, const ClusterRef& j) { return te.family_sums(k, n, j); },
                            [&](long n, const ClusterRef& j) { return ctx.in_omega(n, j); }, c.freq.D);
  std::set<std::pair<long, ClusterRef>> set;
  for (const auto& b : omega_blocks(c.freq, *cat, c.symmetry_n_max)) set.insert(b);
  long wide = 0;
  for (const auto& b : omega_blocks(c.freq, *cat, c.symmetry_wide_n_max, 2)) {
    set.insert(b);
    ++wide;
  }
  std::optional<CountertermKey> injected;
  if (c.inject_asymmetry) {
    // Corrupt a block with two members when there is one, otherwise the first block.
    for (const auto& [n, j] : set)
      if (cat->cluster(j).d() >= 2) {
        injected = CountertermKey{1, n, j};
        break;
      }
    if (!injected && !set.empty()) injected = CountertermKey{1, set.begin()->first, set.begin()->second};
  }
  long matrices = 0, nonzero = 0, asymmetric = 0, off_diagonal = 0;
  json per_k = json::array();
  for (int k = 1; k <= c.verify_k_max; ++k) {
    long k_nonzero = 0;
    for (const auto& [n, j] : set) {
      const int d = cat->cluster(j).d();
      const CountertermKey key{k, n, j};
      table.sums(k, n, j);
      if (injected && *injected == key) table.inject_asymmetry(key, T(1));
      const ScaleSums<T>& sums = table.sums(k, n, j);
      int h_top = -1;
      for (const auto& [h1, V] : sums) {
        ++matrices;
        h_top = std::max(h_top, h1);
        if (!V.is_zero()) {
          ++nonzero;
          ++k_nonzero;
          for (std::size_t a = 0; a < V.rows(); ++a)
            for (std::size_t b = 0; b < V.cols(); ++b)
              if (a != b && !is_zero(V(a, b))) {
                ++off_diagonal;
                a = V.rows();
                break;
              }
        }
        if (!matrix_symmetric(V)) {
          ++asymmetric;
          fail(r, "counterterm_symmetry", "V_" + std::to_string(h1) + " of order " + std::to_string(k) +
                                              " at n=" + std::to_string(n) + " p=" + std::to_string(j.p) +
                                              " j=" + std::to_string(j.j) + " differs from its transpose");
        }
      }
      // L_h = -sum_{h1 < h - 1} V_{h1} for every scale where the sum changes.
      for (int h = 0; h <= h_top + 2; ++h) {
        const Matrix<T> L = table.L(k, n, j, h, d);
        ++matrices;
        if (!matrix_symmetric(L)) {
          ++asymmetric;
          fail(r, "counterterm_symmetry", "L_" + std::to_string(h) + " of order " + std::to_string(k) +
                                              " at n=" + std::to_string(n) + " p=" + std::to_string(j.p) +
                                              " differs from its transpose");
        }
      }
    }
    per_k.push_back({{"k", k}, {"nonzero_sums", k_nonzero}});
  }
  r.detail["blocks"] = set.size();
  r.detail["wide_blocks"] = wide;
  r.detail["matrices"] = matrices;
  r.detail["nonzero"] = nonzero;
  r.detail["nonzero_off_diagonal"] = off_diagonal;
  r.detail["asymmetric"] = asymmetric;
  r.detail["orders"] = per_k;
  r.detail["injected"] = injected.has_value();
}

template <class T>
T random_entry(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> num(-9, 9), den(1, 4);
  if constexpr (is_exact_v<T>) {
    const int a = num(rng);
    const int b = den(rng);
    Rational x(a, b);
    x.canonicalize();
    return x;
  } else {
    const int a = num(rng);
    return static_cast<double>(a) / den(rng);
  }
}

template <class T>
void resonant_cancellation(const RunConfig& c, SuiteResult& r) {
  std::mt19937_64 rng(c.seed);
  std::uniform_int_distribution<int> dim(1, 6), label(-1, 1);
  std::uniform_int_distribution<long> radius(1, 1000);
  const double s = is_integral(c.freq.s) ? c.freq.s : 1.0;
  long resampled = 0, trials = 0, max_d = 0;
  std::map<int, long> by_n1;
  while (trials < c.random_trials) {
    const int d = dim(rng);
    std::vector<int> b(d);
    for (int& x : b) x = label(rng);
    if (std::find(b.begin(), b.end(), 1) == b.end()) b[std::uniform_int_distribution<int>(0, d - 1)(rng)] = 1;
    Matrix<T> A(d, d), Tm(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        T a = random_entry<T>(rng);
        if (i != j && (b[i] == -1 || b[j] == -1)) a = T(0);
        if (i == j && b[i] == -1 && is_zero(a)) a = T(1);
        A(i, j) = A(j, i) = a;
        const T t = random_entry<T>(rng);
        Tm(i, j) = Tm(j, i) = t;
      }
    const long p = radius(rng);
    ResonantDecomposition<T> dec;
    try {
      dec = resonant_block_decompose(A, b, p, s);
    } catch (const SingularA22&) {
      ++resampled;
      continue;
    } catch (const SingularSchurBlock&) {
      ++resampled;
      continue;
    }
    ++trials;
    max_d = std::max<long>(max_d, d);
    ++by_n1[static_cast<int>(dec.n1)];
    const Matrix<T> L = resonant_counterterm_matrix(dec, Tm);
    const Matrix<T> X = L + Tm;
    const Matrix<T> R = cancellation_residual(dec, X);
    const Matrix<T> G = dec.base(1) * X * dec.base(1);
    const auto zero = [](const Matrix<T>& M, double scale) {
      if constexpr (is_exact_v<T>) {
        (void)scale;
        return M.is_zero();
      } else {
        return inf_norm(M) <= 1e-10 * std::max(1.0, scale);
      }
    };
    const double scale = inf_norm(Tm) * std::max(1.0, inf_norm(dec.B) * inf_norm(dec.B));
    if (!zero(R, scale)) fail(r, "resonant_cancellation", "cancellation residual nonzero in trial " + std::to_string(trials));
    if (!zero(G, scale * inf_norm(dec.base(1)) * inf_norm(dec.base(1))))
      fail(r, "resonant_cancellation", "G1 (L + T) G1 nonzero in trial " + std::to_string(trials));
    if (!matrix_symmetric(L)) fail(r, "resonant_cancellation", "counterterm is not symmetric");
  }
  r.detail["trials"] = trials;
  r.detail["resampled_singular"] = resampled;
  r.detail["max_d"] = max_d;
  json hist = json::object();
  for (const auto& [n1, cnt] : by_n1) hist[std::to_string(n1)] = cnt;
  r.detail["small_divisor_sizes"] = hist;
}

PacketSet packet_for(const RunConfig& c) {
  PacketOptions o;
  o.N = c.N;
  o.D = c.freq.D;
  o.s = c.freq.s;
  o.alphas = c.alphas;
  o.r_min = c.r_min;
  o.r_max = c.r_max;
  return construct_packet(o);
}

json packet_json(const PacketSet& P) {
  json m = json::array();
  for (const IVec& v : P.members) {
    json x = json::array();
    for (int i = 0; i < P.D; ++i) x.push_back(v[i]);
    m.push_back(x);
  }
  return m;
}

}  // namespace

json to_json(const SuiteResult& r) {
  json j = {{"name", r.name}, {"ok", r.ok}, {"detail", r.detail}};
  if (!r.ok) {
    j["stage"] = r.stage;
    j["message"] = r.message;
  }
  return j;
}

SuiteResult suite_leading_amplitude(const RunConfig& c) {
  return run_suite("leading_amplitude", [&](SuiteResult& r) {
    const auto cat = c.catalog();
    const QSolution qs = solve_q(0.0, c.K, c.freq, c.cutoff(), cat);
    const double want = std::sqrt(std::pow(c.freq.D, c.freq.s) / std::pow(3.0, c.freq.D));
    r.detail["D"] = c.freq.D;
    r.detail["s"] = c.freq.s;
    r.detail["q"] = qs.q;
    r.detail["expected_q"] = want;
    if (std::fabs(qs.q - want) > 1e-12 * want) fail(r, "q_equation", "q0 differs from sqrt(D^s 3^-D)");
    if (is_integral(c.freq.s)) {
      const Rational exp = expected_q0_squared(c.freq.D, c.freq.s);
      r.detail["q_squared"] = qs.q_squared ? to_string(*qs.q_squared) : "missing";
      r.detail["expected_q_squared"] = to_string(exp);
      if (!qs.q_squared || *qs.q_squared != exp) fail(r, "q_equation", "q0^2 is not D^s 3^-D exactly");
    }
  });
}

SuiteResult suite_resonant_consistency(const RunConfig& c) {
  return run_suite("resonant_consistency", [&](SuiteResult& r) {
    RunConfig one = c;
    one.N = 1;
    const PacketSet P = packet_for(one);
    const Amplitudes amp = amplitudes(P);
    r.detail["packet"] = packet_json(P);
    r.detail["A2"] = amp.A2;
    const BifurcationResidual res = bifurcation_residual(P, amp);
    r.detail["bifurcation_residual_zero"] = res.zero;
    if (!res.zero) fail(r, "bifurcation_equation", "leading field does not solve the bifurcation equation");
    if (is_integral(c.freq.s)) {
      const Rational q2 = leading_q_squared(c.freq.D, c.freq.s);
      r.detail["A2_exact"] = amp.A2_exact ? to_string(*amp.A2_exact) : "missing";
      r.detail["q0_squared"] = to_string(q2);
      if (!amp.A2_exact || *amp.A2_exact != q2) fail(r, "amplitudes", "A^2 differs from q0^2");
    } else {
      const double q2 = std::pow(c.freq.D, c.freq.s) / std::pow(3.0, c.freq.D);
      if (std::fabs(amp.A2 - q2) > 1e-12 * q2) fail(r, "amplitudes", "A^2 differs from q0^2");
    }
  });
}

SuiteResult suite_oracle_equivalence(const RunConfig& c) {
  return run_suite("oracle_equivalence", [&](SuiteResult& r) {
    if (c.arithmetic == Arithmetic::Rational) oracle_equivalence<Rational>(c, r);
    else oracle_equivalence<double>(c, r);
  });
}

SuiteResult suite_counterterm_symmetry(const RunConfig& c) {
  return run_suite("counterterm_symmetry", [&](SuiteResult& r) {
    if (c.arithmetic == Arithmetic::Rational) counterterm_symmetry<Rational>(c, r);
    else counterterm_symmetry<double>(c, r);
  });
}

SuiteResult suite_resonant_cancellation(const RunConfig& c) {
  return run_suite("resonant_cancellation", [&](SuiteResult& r) {
    if (c.arithmetic == Arithmetic::Rational) resonant_cancellation<Rational>(c, r);
    else resonant_cancellation<double>(c, r);
  });
}

SuiteResult suite_bryuno(const RunConfig& c) {
  return run_suite("bryuno", [&](SuiteResult& r) {
    const auto cat = c.catalog();
    const double q = std::sqrt(leading_q_squared(c.freq.D, std::round(c.freq.s)).get_d());
    ExpansionContext<double> ctx(c.freq, c.cutoff(), cat, q);
    TreeExpansion<double> te(ctx, TreeMode::Renormalized, nullptr, c.verify_k_max);
    long trees = 0, violations = 0, small_lines = 0;
    double c_needed = 0.0;
    std::set<int> scales;
    for (int k = 1; k <= c.verify_k_max; ++k)
      for (const auto& [n, m] : te.support(k))
        te.for_each(k, n, m, [&](const LabelledTree& t) {
          ++trees;
          for (const TreeNode& v : t.nodes) {
            if (v.line.unit) continue;
            scales.insert(v.line.h);
            if (v.line.i == 1) ++small_lines;
          }
          const BryunoReport b = bryuno_report(t, c.bryuno_c, c.bryuno_beta, c.freq.tau);
          c_needed = std::max(c_needed, b.c_needed);
          if (!b.ok) {
            ++violations;
            fail(r, "bryuno", "order " + std::to_string(k) + " tree at " + mode_name(n, m, c.freq.D) +
                                  " breaks the line count bound");
          }
        });
    // Family trees carry the small divisors; they are reported, not asserted.
    long family_trees = 0;
    double family_c = 0.0;
    for (const auto& [n, j] : omega_blocks(c.freq, *cat, c.symmetry_n_max))
      for (int k = 1; k <= c.verify_k_max; ++k)
        te.for_each_family(k, n, j, [&](const LabelledTree& t) {
          ++family_trees;
          family_c = std::max(family_c, bryuno_report(t, c.bryuno_c, c.bryuno_beta, c.freq.tau).c_needed);
        });
    r.detail["trees"] = trees;
    r.detail["violations"] = violations;
    r.detail["small_divisor_lines"] = small_lines;
    r.detail["scales"] = std::vector<int>(scales.begin(), scales.end());
    r.detail["c"] = c.bryuno_c;
    r.detail["c_needed"] = c_needed;
    r.detail["family_trees"] = family_trees;
    r.detail["family_c_needed"] = family_c;
  });
}

SuiteResult suite_partition_of_unity(const RunConfig& c) {
  return run_suite("partition_of_unity", [&](SuiteResult& r) {
    const CutoffSpec cut = c.cutoff();
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> expo(-9.0, 0.5);
    std::bernoulli_distribution sign(0.5);
    const bool exact = c.arithmetic == Arithmetic::Rational;
    double worst = 0.0;
    long points = 0, failures = 0;
    for (long i = 0; i < c.grid_size; ++i) {
      double x = std::pow(10.0, expo(rng));
      if (sign(rng)) x = -x;
      ++points;
      // chi(2^{H+1} x) vanishes once 2^{H+1} |x| >= 2 gamma (times the rescaling).
      const double ax = std::fabs(x) * (cut.resonant ? 32.0 : 1.0);
      int H = -1;
      while (std::ldexp(ax, H + 1) < 2.0 * cut.gamma) ++H;
      bool ok = true;
      if (exact) {
        Rational sh(0), sc(0), tail(0);
        for (int h = -1; h <= H; ++h) sh += cut.chi_h_exact(x, h);
        for (int i2 = -1; i2 <= 1; ++i2) sc += cut.chibar_exact(x, i2);
        for (int h = 1; h <= H; ++h) tail += cut.chi_h_exact(x, h);
        ok = sh == 1 && sc == 1 && tail == cut.C_h_exact(x, -1);
      } else {
        double sh = 0.0, sc = 0.0;
        for (int h = -1; h <= H; ++h) sh += cut.chi_h(x, h);
        for (int i2 = -1; i2 <= 1; ++i2) sc += cut.chibar(x, i2);
        const double e = std::max(std::fabs(sh - 1.0), std::fabs(sc - 1.0));
        worst = std::max(worst, e);
        ok = e <= 1e-12;
      }
      if (!ok) {
        ++failures;
        fail(r, "cutoffs", "partition of unity fails at x=" + std::to_string(x));
      }
    }
    r.detail["points"] = points;
    r.detail["failures"] = failures;
    r.detail["exact"] = exact;
    if (!exact) r.detail["max_error"] = worst;
  });
}

SuiteResult suite_cluster_invariants(const RunConfig& c) {
  return run_suite("cluster_invariants", [&](SuiteResult& r) {
    const int D = c.freq.D;
    const ClusterConstants& cc = c.clusters;
    long spheres = 0, clusters = 0;
    int max_d = 0;
    double worst_sep = std::numeric_limits<double>::infinity();  // min separation / (C2 p^beta)
    double worst_diam = 0.0;                                     // max diam / (C1 p^alpha)
    for (long p = 1; p <= c.clusters_p_max; ++p) {
      const std::vector<IVec> pts = enumerate_sphere(p, D);
      if (pts.empty()) continue;
      ++spheres;
      const std::vector<SphereCluster> cl = cluster_sphere(pts, cc, D);
      const ClusterCheck chk = check_sphere_clusters(cl, cc, D);
      if (!chk.ok) fail(r, "clusters", "p=" + std::to_string(p) + ": " + chk.failure);
      std::size_t covered = 0;
      for (const SphereCluster& s : cl) {
        ++clusters;
        covered += s.members.size();
        max_d = std::max(max_d, s.d());
        worst_diam = std::max(worst_diam, s.diam / (cc.C1 * std::pow(static_cast<double>(p), cc.alpha)));
        if (s.min_separation >= 0.0)
          worst_sep = std::min(worst_sep, s.min_separation / (cc.C2 * std::pow(static_cast<double>(p), cc.beta)));
        if (D == 2 && s.d() > cc.max_size) fail(r, "clusters", "p=" + std::to_string(p) + ": cluster too large");
      }
      if (covered != pts.size()) fail(r, "clusters", "p=" + std::to_string(p) + ": clusters do not cover the sphere");
    }
    if (worst_sep < 1.0) fail(r, "clusters", "separation below C2 p^beta");
    r.detail["D"] = D;
    r.detail["p_max"] = c.clusters_p_max;
    r.detail["spheres"] = spheres;
    r.detail["clusters"] = clusters;
    r.detail["max_d"] = max_d;
    r.detail["min_separation_ratio"] = finite_or_max(worst_sep);
    r.detail["max_diameter_ratio"] = worst_diam;
    r.detail["constants"] = {{"alpha", cc.alpha}, {"beta", cc.beta}, {"C1", cc.C1}, {"C2", cc.C2}};
  });
}

SuiteResult suite_bourgain(const RunConfig& c) {
  return run_suite("bourgain_partition", [&](SuiteResult& r) {
    const std::vector<IVec> pts = ball_points(c.freq.D, c.bourgain_radius);
    const std::vector<BourgainCell> cells = bourgain_partition(pts, c.bourgain, c.freq.D);
    const ClusterCheck chk = check_bourgain_cells(cells, c.bourgain, c.freq.D);
    if (!chk.ok) fail(r, "bourgain_partition", chk.failure);
    std::size_t covered = 0, largest = 0;
    for (const BourgainCell& b : cells) {
      covered += b.members.size();
      largest = std::max(largest, b.members.size());
    }
    if (covered != pts.size()) fail(r, "bourgain_partition", "cells do not cover the ball");
    r.detail["modes"] = pts.size();
    r.detail["cells"] = cells.size();
    r.detail["largest_cell"] = largest;
  });
}

SuiteResult suite_loop_lemma(const RunConfig& c) {
  return run_suite("loop_lemma", [&](SuiteResult& r) {
    const PacketSet P = packet_for(c);
    const Amplitudes amp = amplitudes(P);
    const JOperator J(P, amp);
    const long head = head_block_bound(P, amp.A2);
    const long window = std::min(head, c.block_window);
    const BlockPartition bp = find_blocks(J, window, static_cast<std::size_t>(c.block_bound));
    if (!bp.offblock_zero) fail(r, "blocks", "J couples distinct blocks");
    if (bp.max_size > bp.bound) fail(r, "blocks", "block larger than the configured bound");
    const LoopReport lr = loop_scan(P, bp, c.chains, c.chain_length, c.seed, std::min(window, 50L * P.D));
    if (lr.repeat_failures) fail(r, "loop_lemma", std::to_string(lr.repeat_failures) + " repeated letters break orthogonality");
    if (lr.long_without_loop) fail(r, "loop_lemma", "chain longer than K without a loop");
    r.detail["N"] = P.N();
    r.detail["packet"] = packet_json(P);
    r.detail["head_block_bound"] = head;
    r.detail["window"] = window;
    r.detail["blocks"] = bp.blocks.size();
    r.detail["max_block"] = bp.max_size;
    r.detail["block_bound"] = bp.bound;
    r.detail["log10_K"] = std::isfinite(bp.log10_K) ? json(bp.log10_K) : json("inf");
    r.detail["chains"] = lr.chains;
    r.detail["longest_chain"] = lr.longest;
    r.detail["longest_loop_free"] = lr.longest_loop_free;
    r.detail["repeats_checked"] = lr.repeats_checked;
    r.detail["chains_of_length_K"] = lr.long_chains;
  });
}

SuiteResult suite_derivative_identities(const RunConfig& c) {
  return run_suite("derivative_identities", [&](SuiteResult& r) {
    std::mt19937_64 rng(c.seed);
    std::uniform_int_distribution<int> dim(1, 6);
    std::uniform_real_distribution<double> entry(-1.0, 1.0);
    double worst_inv = 0.0, worst_norm = 0.0;
    for (int t = 0; t < c.random_trials; ++t) {
      const int d = dim(rng);
      Matrix<double> A(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A(i, j) = entry(rng) + (i == j ? 2.0 : 0.0);
      const DerivativeCheck chk = check_derivative_identities(A);
      worst_inv = std::max(worst_inv, chk.inverse_rel_error);
      worst_norm = std::max(worst_norm, chk.norm_rel_error);
    }
    if (worst_inv > 1e-6) fail(r, "derivatives", "inverse derivative off by " + std::to_string(worst_inv));
    if (worst_norm > 1e-6) fail(r, "derivatives", "norm derivative off by " + std::to_string(worst_norm));
    r.detail["matrices"] = c.random_trials;
    r.detail["inverse_rel_error"] = worst_inv;
    r.detail["norm_rel_error"] = worst_norm;
  });
}

SuiteResult suite_residual_scaling(const RunConfig& c, double tolerance) {
  return run_suite("residual_scaling", [&](SuiteResult& r) {
    const std::vector<double> etas = log_grid(c.eta_min, c.eta_max, c.eta_points);
    json orders = json::array();
    std::optional<PacketSet> P;
    std::optional<Amplitudes> amp;
    if (c.resonant) {
      P = packet_for(c);
      amp = amplitudes(*P);
    }
    for (int K = 1; K <= std::max(1, c.K); ++K) {
      std::vector<double> x, y;
      json samples = json::array();
      for (double eta : etas) {
        const ResidualSample s = c.resonant ? resonant_residual(*P, *amp, eta, K)
                                            : residual_at(eta, K, c.freq, c.cutoff(), c.catalog());
        const double v = std::max(s.max_residual, s.max_kernel_residual);
        x.push_back(eta);
        y.push_back(v);
        samples.push_back({{"eta", eta}, {"residual", v}});
      }
      const double slope = loglog_slope(x, y);
      if (std::fabs(slope - (K + 1)) > tolerance)
        fail(r, "residual", "order " + std::to_string(K) + " slope " + std::to_string(slope) + " is not " +
                                std::to_string(K + 1));
      orders.push_back({{"K", K}, {"slope", slope}, {"samples", samples}});
    }
    r.detail["orders"] = orders;
    r.detail["tolerance"] = tolerance;
  });
}

SuiteResult suite_measure_trend(const RunConfig& c) {
  return run_suite("measure_trend", [&](SuiteResult& r) {
    std::vector<double> grid = c.eps_grid;
    std::sort(grid.rbegin(), grid.rend());
    json rows = json::array();
    double prev = -1.0;
    for (double eps0 : grid) {
      FrequencyContext f = c.freq;
      f.eps0 = eps0;
      const SweepResult s = measure_sweep(eps0, c.grid_size, named_predicate(c.measure_predicate, f));
      rows.push_back({{"eps0", eps0}, {"fraction", s.fraction}, {"excluded_intervals", s.excluded.size()}});
      if (s.fraction < prev) fail(r, "measure", "fraction decreases at eps0=" + std::to_string(eps0));
      prev = s.fraction;
    }
    r.detail["sweeps"] = rows;
  });
}

std::vector<SuiteResult> run_verify_suites(const RunConfig& c) {
  std::vector<SuiteResult> out;
  if (!c.resonant) {
    out.push_back(suite_oracle_equivalence(c));
    out.push_back(suite_counterterm_symmetry(c));
    out.push_back(suite_bryuno(c));
  } else {
    out.push_back(suite_resonant_consistency(c));
  }
  out.push_back(suite_partition_of_unity(c));
  out.push_back(suite_cluster_invariants(c));
  out.push_back(suite_bourgain(c));
  out.push_back(suite_resonant_cancellation(c));
  out.push_back(suite_derivative_identities(c));
  out.push_back(suite_loop_lemma(c));
  return out;
}

}  // namespace lindstedt::cli
