#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lindstedt/lattice.hpp"
#include "lindstedt/numeric.hpp"

namespace lindstedt {

struct FrequencyContext {
  int D = 2;
  double s = 1.0;
  double mu = 0.41421356237309503;  // sqrt(2) - 1
  double eps = 0.01;
  double eps0 = 0.05;
  double gamma = 5e-3;
  double gamma0 = 1e-2;
  double tau0 = 2.0;
  double tau1 = 3.5;
  double tau = 5.5;
  double alpha = 0.2;
  long n_max = 200;

  double omega() const { return D + mu - eps; }
  double s1() const { return s - 2.0 * alpha; }
  double s2() const { return s1() / 4.0; }

  // Throws ConfigError naming the violated relation.
  void validate() const;
  FrequencyContext with_eps(double e) const {
    FrequencyContext c = *this;
    c.eps = e;
    return c;
  }
};

// -omega n + p + mu, exact when T is Rational (mu and eps are read as the
// dyadic rationals their doubles represent).
template <class T>
T delta(long n, long p, const FrequencyContext& ctx) {
  const T mu = from_double<T>(ctx.mu);
  const T eps = from_double<T>(ctx.eps);
  const T omega = T(ctx.D) + mu - eps;
  return -omega * T(n) + T(p) + mu;
}

enum class BumpProfile { Smoothstep, ExpBump };

BumpProfile parse_bump(const std::string& name);
std::string bump_name(BumpProfile b);

// Smooth cutoff chi and the derived partitions of unity.
struct CutoffSpec {
  double gamma = 5e-3;
  BumpProfile profile = BumpProfile::Smoothstep;
  // Rescaled scale functions chi_h(32 x) used for the zero-mu problem.
  bool resonant = false;

  double chi(double x) const;
  // h >= -1
  double chi_h(double x, int h) const;
  // i in {-1, 0, 1}
  double chibar(double x, int i) const;
  // Sum of chi_{h'} over h' >= h + 2, i.e. chi(2^{h+2} x).
  double C_h(double x, int h) const;

  // Exact counterparts: each chi value is converted exactly and the
  // differences are taken in rationals so every telescoping sum is exact.
  Rational chi_h_exact(double x, int h) const;
  Rational chibar_exact(double x, int i) const;
  Rational C_h_exact(double x, int h) const;

  template <class T>
  T chi_h_as(double x, int h) const {
    if constexpr (is_exact_v<T>) return chi_h_exact(x, h);
    else return chi_h(x, h);
  }
  template <class T>
  T chibar_as(double x, int i) const {
    if constexpr (is_exact_v<T>) return chibar_exact(x, i);
    else return chibar(x, i);
  }
  template <class T>
  T C_h_as(double x, int h) const {
    if constexpr (is_exact_v<T>) return C_h_exact(x, h);
    else return C_h(x, h);
  }

  // Scales with nonzero chi_h at x (at most two, consecutive).
  std::vector<int> active_scales(double x, int h_cap = 200) const;
  // Largest |chi'| times gamma, measured on a fine grid.
  double derivative_constant() const;
};

struct DiophantineWitness {
  bool ok = true;
  long n = 0;
  long p = 0;
  int a = 0;
  // Smallest n^tau |divisor| - threshold seen during the scan.
  double margin = 0.0;
};

DiophantineWitness check_mu_nonresonant(double mu, double gamma0, double tau0, long n_max, int D);

// |omega n - p| >= gamma / n^tau1 for 1 <= n <= n_max.
DiophantineWitness check_melnikov_first(double eps, const FrequencyContext& ctx);

// Eigen-shift nu_{n,j} for a block, or nullopt when the block is missing.
using NuLookup = std::function<std::optional<double>(long n, const ClusterRef& j)>;

// |omega n - (p_j + mu + nu / p_j^{s1})| >= gamma / n^tau over (n, j) in the
// counterterm index set with n <= n_max. Throws MissingBlock.
DiophantineWitness check_melnikov_second(double eps, const NuLookup& nu, const FrequencyContext& ctx,
                                         const ClusterCatalog& catalog);

// Zero-mu divisor condition |-(D - eps) n + p| >= gamma / n^tau1 for Dn != p.
DiophantineWitness check_resonant_divisors(double eps, const FrequencyContext& ctx);

// Blocks (n, j) of the counterterm index set with n <= n_max and at least min_d members,
// ordered by n, then p, then j. The kernel block (1, D) is left out.
std::vector<std::pair<long, ClusterRef>> omega_blocks(const FrequencyContext& ctx, const ClusterCatalog& catalog,
                                                      long n_max, int min_d = 1);

struct SeparationViolation {
  long n, p, n1, p1;
};

// Pairs of near-resonant sites closer in n than the separation lemma allows.
std::vector<SeparationViolation> separation_scan(double eps, const FrequencyContext& ctx, double s0,
                                                 long n_max);

struct SweepSample {
  double eps;
  bool pass;
  double margin;
};

struct SweepResult {
  double eps0 = 0.0;
  long grid_size = 0;
  double fraction = 0.0;
  std::vector<std::pair<double, double>> excluded;  // merged intervals
  std::vector<SweepSample> samples;
};

using EpsPredicate = std::function<DiophantineWitness(double eps)>;

// Midpoint grid eps_i = eps0 (i + 1/2) / N.
SweepResult measure_sweep(double eps0, long grid_size, const EpsPredicate& pred, bool keep_samples = false);

// Predicates by name: "first_melnikov", "always", "resonant".
EpsPredicate named_predicate(const std::string& name, const FrequencyContext& ctx);

}  // namespace lindstedt
