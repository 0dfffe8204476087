#include "lindstedt/smalldiv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lindstedt/errors.hpp"

namespace lindstedt {

void FrequencyContext::validate() const {
  auto bad = [](const std::string& why) { throw ConfigError("FrequencyContext", why); };
  if (D < 2 || D > kMaxDim) bad("D must lie in [2, " + std::to_string(kMaxDim) + "]");
  if (!(s >= 0)) bad("s must be non-negative");
  if (!(mu >= 0)) bad("mu must be non-negative");
  if (!(eps0 > 0)) bad("eps0 must be positive");
  if (!(eps > 0 && eps <= eps0)) bad("eps must lie in (0, eps0]");
  if (!(gamma > 0 && gamma < 1)) bad("gamma must lie in (0, 1)");
  if (!(tau1 > tau0 + 1)) bad("tau1 must exceed tau0 + 1");
  if (!(tau > tau0 + 1 + D)) bad("tau must exceed tau0 + 1 + D");
  if (!(gamma <= gamma0 / 2)) bad("gamma must not exceed gamma0 / 2");
  if (!(alpha > 0 && s2() < s)) bad("alpha must be positive with s2 < s");
  if (n_max < 0) bad("n_max must be non-negative");
}

BumpProfile parse_bump(const std::string& name) {
  if (name == "smoothstep") return BumpProfile::Smoothstep;
  if (name == "exp_bump") return BumpProfile::ExpBump;
  throw ConfigError("CutoffSpec", "unknown bump profile '" + name + "'");
}

std::string bump_name(BumpProfile b) {
  return b == BumpProfile::Smoothstep ? "smoothstep" : "exp_bump";
}

namespace {

// Decreasing transition from 1 at t = 0 to 0 at t = 1.
double profile_value(BumpProfile b, double t) {
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  if (b == BumpProfile::ExpBump) return std::exp(1.0 - 1.0 / (1.0 - t * t));
  const double f0 = std::exp(-1.0 / (1.0 - t));
  const double f1 = std::exp(-1.0 / t);
  return f0 / (f0 + f1);
}

}  // namespace

double CutoffSpec::chi(double x) const {
  const double a = std::fabs(x);
  if (a <= gamma) return 1.0;
  if (a >= 2.0 * gamma) return 0.0;
  return profile_value(profile, a / gamma - 1.0);
}

double CutoffSpec::chi_h(double x, int h) const {
  if (resonant) x *= 32.0;
  if (h == -1) return 1.0 - chi(x);
  return chi(std::ldexp(x, h)) - chi(std::ldexp(x, h + 1));
}

double CutoffSpec::chibar(double x, int i) const {
  switch (i) {
    case 1:
      return chi(8.0 * x);
    case 0:
      return chi(4.0 * x) - chi(8.0 * x);
    case -1:
      return 1.0 - chi(4.0 * x);
    default:
      throw LabelInconsistency("chibar", "type label must be -1, 0 or 1");
  }
}

double CutoffSpec::C_h(double x, int h) const {
  if (resonant) x *= 32.0;
  return chi(std::ldexp(x, h + 2));
}

Rational CutoffSpec::chi_h_exact(double x, int h) const {
  if (resonant) x *= 32.0;
  if (h == -1) return Rational(1) - exact(chi(x));
  return exact(chi(std::ldexp(x, h))) - exact(chi(std::ldexp(x, h + 1)));
}

Rational CutoffSpec::chibar_exact(double x, int i) const {
  switch (i) {
    case 1:
      return exact(chi(8.0 * x));
    case 0:
      return exact(chi(4.0 * x)) - exact(chi(8.0 * x));
    case -1:
      return Rational(1) - exact(chi(4.0 * x));
    default:
      throw LabelInconsistency("chibar", "type label must be -1, 0 or 1");
  }
}

Rational CutoffSpec::C_h_exact(double x, int h) const {
  if (resonant) x *= 32.0;
  return exact(chi(std::ldexp(x, h + 2)));
}

std::vector<int> CutoffSpec::active_scales(double x, int h_cap) const {
  std::vector<int> hs;
  if (chi_h(x, -1) != 0.0) hs.push_back(-1);
  const double a = std::fabs(resonant ? 32.0 * x : x);
  if (a == 0.0) {
    // Every finite scale vanishes at the origin; the mass sits at h = infinity.
    return hs;
  }
  // chi_h(x) != 0 only for 2^{-h-1} gamma < |x| < 2^{-h+1} gamma.
  const int hc = static_cast<int>(std::floor(std::log2(gamma / a)));
  for (int h = std::max(0, hc - 1); h <= std::min(h_cap, hc + 2); ++h)
    if (chi_h(x, h) != 0.0) hs.push_back(h);
  return hs;
}

double CutoffSpec::derivative_constant() const {
  const int N = 20000;
  double best = 0.0;
  double prev = chi(gamma);
  for (int i = 1; i <= N; ++i) {
    const double x = gamma * (1.0 + static_cast<double>(i) / N);
    const double v = chi(x);
    best = std::max(best, std::fabs(v - prev) * N);
    prev = v;
  }
  return best;
}

namespace {

long nearest(double x) { return static_cast<long>(std::llround(x)); }

}  // namespace

DiophantineWitness check_mu_nonresonant(double mu, double gamma0, double tau0, long n_max, int D) {
  DiophantineWitness w;
  w.margin = std::numeric_limits<double>::infinity();
  for (long n = 1; n <= n_max; ++n) {
    const double thr = gamma0 / std::pow(static_cast<double>(n), tau0);
    // Negative n maps to a = -1 with positive n.
    for (int a : {0, 1, -1}) {
      const double v = (D + mu) * static_cast<double>(n) - a * mu;
      for (long p : {nearest(v) - 1, nearest(v), nearest(v) + 1}) {
        if (n == 1 && p == D) continue;
        const double d = std::fabs(v - static_cast<double>(p));
        const double marg = d * std::pow(static_cast<double>(n), tau0) - gamma0;
        if (marg < w.margin) w.margin = marg;
        if (d < thr && w.ok) {
          w.ok = false;
          w.n = n;
          w.p = p;
          w.a = a;
        }
      }
    }
    if (!w.ok) return w;
  }
  return w;
}

DiophantineWitness check_melnikov_first(double eps, const FrequencyContext& ctx) {
  DiophantineWitness w;
  w.margin = std::numeric_limits<double>::infinity();
  const double omega = ctx.D + ctx.mu - eps;
  for (long n = 1; n <= ctx.n_max; ++n) {
    const double v = omega * static_cast<double>(n);
    const long p = std::max(0L, nearest(v));
    const double nt = std::pow(static_cast<double>(n), ctx.tau1);
    const double d = std::fabs(v - static_cast<double>(p));
    const double marg = d * nt - ctx.gamma;
    if (marg < w.margin) w.margin = marg;
    if (marg < 0) {
      w.ok = false;
      w.n = n;
      w.p = p;
      return w;
    }
  }
  return w;
}

DiophantineWitness check_melnikov_second(double eps, const NuLookup& nu, const FrequencyContext& ctx,
                                         const ClusterCatalog& catalog) {
  DiophantineWitness w;
  w.margin = std::numeric_limits<double>::infinity();
  const double omega = ctx.D + ctx.mu - eps;
  for (long n = 1; n <= ctx.n_max; ++n) {
    const double nd = static_cast<double>(n);
    const long plo = static_cast<long>(std::floor(-0.5 + (ctx.D + ctx.mu - ctx.eps0) * nd));
    const long phi = static_cast<long>(std::ceil((ctx.D + ctx.mu) * nd + 0.5));
    for (long p = std::max(plo, 1L); p <= phi; ++p) {
      if (!omega_membership(n, p, ctx.mu, ctx.eps0, ctx.D)) continue;
      for (const SphereCluster& c : catalog.sphere(p)) {
        const ClusterRef ref{p, c.j};
        const auto v = nu(n, ref);
        if (!v)
          throw MissingBlock("check_melnikov_second",
                             "no counterterm block for n=" + std::to_string(n) + " p=" + std::to_string(p));
        const double shift = *v / std::pow(static_cast<double>(p), ctx.s1());
        const double d = std::fabs(omega * nd - (p + ctx.mu + shift));
        const double marg = d * std::pow(nd, ctx.tau) - ctx.gamma;
        if (marg < w.margin) w.margin = marg;
        if (marg < 0) {
          w.ok = false;
          w.n = n;
          w.p = p;
          w.a = c.j;
          return w;
        }
      }
    }
  }
  return w;
}

namespace {

std::vector<char> representable_table(int D, long p_max) {
  std::vector<char> t(static_cast<std::size_t>(p_max + 1), 0);
  if (D >= 4) {
    std::fill(t.begin(), t.end(), 1);
    return t;
  }
  const long r = static_cast<long>(std::sqrt(static_cast<double>(p_max))) + 1;
  if (D == 2) {
    for (long a = 0; a <= r; ++a)
      for (long b = a; b <= r; ++b)
        if (a * a + b * b <= p_max) t[a * a + b * b] = 1;
  } else {
    for (long a = 0; a <= r; ++a)
      for (long b = a; b <= r; ++b)
        for (long c = b; c <= r; ++c)
          if (a * a + b * b + c * c <= p_max) t[a * a + b * b + c * c] = 1;
  }
  return t;
}

}  // namespace

DiophantineWitness check_resonant_divisors(double eps, const FrequencyContext& ctx) {
  DiophantineWitness w;
  w.margin = std::numeric_limits<double>::infinity();
  static thread_local std::vector<char> table;
  static thread_local int table_D = 0;
  const long p_max = ctx.D * ctx.n_max + 2;
  if (table_D != ctx.D || static_cast<long>(table.size()) <= p_max) {
    table = representable_table(ctx.D, p_max);
    table_D = ctx.D;
  }
  const double omega = ctx.D - eps;
  for (long n = 1; n <= ctx.n_max; ++n) {
    const double v = omega * static_cast<double>(n);
    const double nt = std::pow(static_cast<double>(n), ctx.tau1);
    for (long p : {nearest(v) - 1, nearest(v), nearest(v) + 1}) {
      if (p < 0 || p == ctx.D * n || !table[p]) continue;
      const double d = std::fabs(v - static_cast<double>(p));
      const double marg = d * nt - ctx.gamma;
      if (marg < w.margin) w.margin = marg;
      if (marg < 0) {
        w.ok = false;
        w.n = n;
        w.p = p;
        return w;
      }
    }
  }
  return w;
}

std::vector<SeparationViolation> separation_scan(double eps, const FrequencyContext& ctx, double s0,
                                                 long n_max) {
  const double omega = ctx.D + ctx.mu - eps;
  struct Site {
    long n, p;
  };
  std::vector<Site> sites;
  for (long n = 1; n <= n_max; ++n) {
    const double v = omega * static_cast<double>(n) - ctx.mu;
    for (long p : {nearest(v) - 1, nearest(v), nearest(v) + 1}) {
      if (p < 1) continue;
      if (std::pow(static_cast<double>(p), s0) * std::fabs(v - static_cast<double>(p)) <= ctx.gamma / 2)
        sites.push_back({n, p});
    }
  }
  std::vector<SeparationViolation> bad;
  for (const Site& a : sites)
    for (const Site& b : sites) {
      if (a.p < b.p || (a.n == b.n && a.p == b.p)) continue;
      const double need = std::pow(static_cast<double>(b.p), s0 / ctx.tau1);
      if (static_cast<double>(std::labs(a.n - b.n)) < need) bad.push_back({a.n, a.p, b.n, b.p});
    }
  return bad;
}

SweepResult measure_sweep(double eps0, long grid_size, const EpsPredicate& pred, bool keep_samples) {
  if (grid_size <= 0) throw ConfigError("measure_sweep", "grid size must be positive");
  SweepResult r;
  r.eps0 = eps0;
  r.grid_size = grid_size;
  const double h = eps0 / static_cast<double>(grid_size);
  long pass = 0;
  bool open = false;
  double lo = 0.0;
  for (long i = 0; i < grid_size; ++i) {
    const double e = eps0 * (static_cast<double>(i) + 0.5) / static_cast<double>(grid_size);
    const DiophantineWitness w = pred(e);
    if (keep_samples) r.samples.push_back({e, w.ok, w.margin});
    if (w.ok) {
      ++pass;
      if (open) {
        r.excluded.emplace_back(lo, h * static_cast<double>(i));
        open = false;
      }
    } else if (!open) {
      open = true;
      lo = h * static_cast<double>(i);
    }
  }
  if (open) r.excluded.emplace_back(lo, eps0);
  r.fraction = static_cast<double>(pass) / static_cast<double>(grid_size);
  return r;
}

EpsPredicate named_predicate(const std::string& name, const FrequencyContext& ctx) {
  if (name == "first_melnikov")
    return [ctx](double e) { return check_melnikov_first(e, ctx); };
  if (name == "always") return [](double) { return DiophantineWitness{}; };
  if (name == "resonant") return [ctx](double e) { return check_resonant_divisors(e, ctx); };
  throw ConfigError("measure_sweep", "unknown predicate '" + name + "'");
}

std::vector<std::pair<long, ClusterRef>> omega_blocks(const FrequencyContext& ctx, const ClusterCatalog& catalog,
                                                      long n_max, int min_d) {
  std::vector<std::pair<long, ClusterRef>> out;
  for (long n = 1; n <= n_max; ++n) {
    const auto lo = static_cast<long>(std::floor((ctx.D + ctx.mu - ctx.eps0) * n - 0.5));
    const auto hi = static_cast<long>(std::ceil((ctx.D + ctx.mu) * n + 0.5));
    for (long p = std::max(1L, lo); p <= hi; ++p) {
      if (n == 1 && p == ctx.D) continue;
      if (!omega_membership(n, p, ctx.mu, ctx.eps0, ctx.D)) continue;
      const auto& sphere = catalog.sphere(p);
      for (const SphereCluster& cl : sphere)
        if (cl.d() >= min_d) out.push_back({n, ClusterRef{p, cl.j}});
    }
  }
  return out;
}

}  // namespace lindstedt
