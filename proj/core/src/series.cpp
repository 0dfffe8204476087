#include "lindstedt/series.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lindstedt {

template <class T>
void add_cubic(const Coefficients<T>& a, const Coefficients<T>& b, const Coefficients<T>& c, const T& w,
               Coefficients<T>& out) {
  for (const auto& [x1, v1] : a)
    for (const auto& [x2, v2] : b) {
      const T v12 = w * v1 * v2;
      if (is_zero(v12)) continue;
      for (const auto& [x3, v3] : c) {
        const ModeKey x{x1.first + x2.first - x3.first, x1.second + x2.second - x3.second};
        out[x] += v12 * v3;
      }
    }
}

namespace {

// Single coefficient (u u conj u)_{target}.
template <class T>
T cubic_at(const Coefficients<T>& u, const ModeKey& target) {
  T s = T(0);
  for (const auto& [x1, v1] : u)
    for (const auto& [x2, v2] : u) {
      const ModeKey x3{x1.first + x2.first - target.first, x1.second + x2.second - target.second};
      auto it = u.find(x3);
      if (it != u.end()) s += v1 * v2 * it->second;
    }
  return s;
}

template <class T>
void prune(Coefficients<T>& c) {
  for (auto it = c.begin(); it != c.end();) it = is_zero(it->second) ? c.erase(it) : std::next(it);
}

}  // namespace

template <class T>
Coefficients<T> SeriesSolution<T>::truncated(const T& eta) const {
  Coefficients<T> out;
  T w = T(1);
  for (const auto& ck : orders) {
    for (const auto& [x, v] : ck) out[x] += w * v;
    w *= eta;
  }
  prune(out);
  return out;
}

template <class T>
std::pair<long, int> SeriesSolution<T>::support_radius(int k) const {
  long n = 0;
  int m = 0;
  for (const auto& [x, v] : orders.at(k)) {
    n = std::max(n, std::labs(x.first));
    for (int i = 0; i < kMaxDim; ++i) m = std::max(m, std::abs(x.second[i]));
  }
  return {n, m};
}

IVec kernel_vertex(int D) {
  IVec v{};
  for (int i = 0; i < D; ++i) v[i] = 1;
  return v;
}

template <class T>
Coefficients<T> leading_coefficients(int D, const T& q) {
  Coefficients<T> out;
  for (int mask = 0; mask < (1 << D); ++mask) {
    IVec m{};
    int neg = 0;
    for (int i = 0; i < D; ++i) {
      m[i] = (mask >> i) & 1 ? -1 : 1;
      neg += (mask >> i) & 1;
    }
    out[{1, m}] = neg % 2 ? T(-q) : q;
  }
  return out;
}

template <class T>
RecursionOracle<T>::RecursionOracle(const ExpansionContext<T>& ctx, const CountertermTable<T>* table)
    : ctx_(ctx), table_(table) {}

template <class T>
const Coefficients<T>& RecursionOracle<T>::source(int k) {
  auto it = f_.find(k);
  if (it != f_.end()) return it->second;
  Coefficients<T> F;
  for (int k1 = 0; k1 <= k - 1; ++k1)
    for (int k2 = 0; k1 + k2 <= k - 1; ++k2) {
      const int k3 = k - 1 - k1 - k2;
      add_cubic(order(k1), order(k2), order(k3), T(1), F);
    }
  prune(F);
  return f_[k] = std::move(F);
}

template <class T>
const Coefficients<T>& RecursionOracle<T>::order(int k) {
  while (static_cast<int>(u_.size()) <= k) compute(static_cast<int>(u_.size()));
  return u_[k];
}

template <class T>
void RecursionOracle<T>::compute(int k) {
  Coefficients<T> u, w;
  if (k == 0) {
    u = leading_coefficients<T>(ctx_.D(), ctx_.q());
    u_.push_back(std::move(u));
    w_.push_back({});
    return;
  }
  const ClusterCatalog& cat = ctx_.catalog();
  const Coefficients<T>& F = source(k);
  std::set<BlockKey> blocks;
  for (const auto& kv : F) {
    if (norm2(kv.first.second) == 0) {
      throw InvariantViolation("recursion", "source on the zero mode at order " + std::to_string(k));
    }
    blocks.emplace(kv.first.first, cat.locate(kv.first.second).first);
  }
  if (table_)
    for (int r = 1; r < k; ++r)
      for (const auto& kv : w_[k - r]) {
        const ClusterRef ref = cat.locate(kv.first.second).first;
        if (table_->in_omega(kv.first.first, ref)) blocks.emplace(kv.first.first, ref);
      }
  for (const auto& [n, ref] : blocks) {
    if (ctx_.excluded_block(n, ref)) continue;
    const SphereCluster& cl = cat.cluster(ref);
    const int d = cl.d();
    auto gather = [&](const Coefficients<T>& c) {
      std::vector<T> v(d, T(0));
      for (int b = 0; b < d; ++b) {
        auto it = c.find({n, cl.members[b]});
        if (it != c.end()) v[b] = it->second;
      }
      return v;
    };
    const std::vector<T> Fv = gather(F);
    const BlockPropagator<T>& P = ctx_.propagator(n, ref);
    for (const auto& [i, h] : P.active_labels()) {
      const Matrix<T> G = P.G(h, i);
      std::vector<T> v = G * Fv;
      if (i == 1 && table_ && table_->in_omega(n, ref)) {
        for (int r = 1; r < k; ++r) {
          const Matrix<T> L = table_->L(r, n, ref, h, d);
          if (L.is_zero()) continue;
          const std::vector<T> g = G * (L * gather(w_[k - r]));
          for (int a = 0; a < d; ++a) v[a] += g[a];
        }
      }
      for (int a = 0; a < d; ++a) {
        if (is_zero(v[a])) continue;
        u[{n, cl.members[a]}] += v[a];
        if (i != -1) w[{n, cl.members[a]}] += v[a];
      }
    }
  }
  prune(u);
  prune(w);
  u_.push_back(std::move(u));
  w_.push_back(std::move(w));
}

template <class T>
SeriesSolution<T> RecursionOracle<T>::solve(int K) {
  SeriesSolution<T> s;
  s.K = K;
  s.q = ctx_.q();
  for (int k = 0; k <= K; ++k) s.orders.push_back(order(k));
  return s;
}

Rational leading_q_squared(int D, double s) {
  if (!is_integral(s)) throw ConfigError("q_equation", "exact leading amplitude needs an integer s");
  const Coefficients<Rational> u0 = leading_coefficients<Rational>(D, Rational(1));
  const Rational c0 = cubic_at(u0, {1, kernel_vertex(D)});
  if (sgn(c0) == 0) throw InvariantViolation("q_equation", "vanishing kernel triple count");
  Rational r = real_pow<Rational>(D, s) / c0;
  r.canonicalize();
  return r;
}

namespace {

double kernel_source(double q, double eta, int K, const FrequencyContext& f, const CutoffSpec& cut,
                     const std::shared_ptr<const ClusterCatalog>& cat, const BlockField<double>& M) {
  ExpansionContext<double> ctx(f.with_eps(eta), cut, cat, q);
  if (M) ctx.set_counterterms(M);
  RecursionOracle<double> oracle(ctx);
  const Coefficients<double> u = oracle.solve(K).truncated(eta);
  return cubic_at(u, {1, kernel_vertex(f.D)});
}

}  // namespace

QSolution solve_q(double eta, int K, const FrequencyContext& f, const CutoffSpec& cut,
                  std::shared_ptr<const ClusterCatalog> cat, const BlockField<double>& M, const QSolveOptions& opt) {
  QSolution out;
  const double Ds = std::pow(static_cast<double>(f.D), f.s);
  double q0;
  if (is_integral(f.s)) {
    const Rational q2 = leading_q_squared(f.D, f.s);
    q0 = std::sqrt(q2.get_d());
    if (eta == 0.0 || K == 0) out.q_squared = q2;
  } else {
    q0 = std::sqrt(Ds / std::pow(3.0, f.D));
  }
  out.q = q0;
  if (eta == 0.0 || K == 0) return out;
  auto g = [&](double q) { return kernel_source(q, eta, K, f, cut, cat, M) - Ds * q; };
  double q = q0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    const double gq = g(q);
    const double hstep = 1e-6 * std::max(1.0, std::fabs(q));
    const double dg = (g(q + hstep) - g(q - hstep)) / (2.0 * hstep);
    if (dg == 0.0 || !std::isfinite(dg)) throw NoConvergence("q_equation", "flat Newton step");
    const double step = opt.damping * gq / dg;
    q -= step;
    out.iterations = it;
    out.residual = std::fabs(g(q));
    if (std::fabs(step) <= opt.tol * std::max(1.0, std::fabs(q)) || out.residual <= opt.tol) {
      out.q = q;
      return out;
    }
  }
  throw NoConvergence("q_equation", "no convergence after " + std::to_string(opt.max_iter) + " iterations");
}

ResidualSample residual_at(double eta, int K, const FrequencyContext& f, const CutoffSpec& cut,
                           std::shared_ptr<const ClusterCatalog> cat) {
  ResidualSample r;
  r.eta = eta;
  const QSolution qs = solve_q(eta, K, f, cut, cat);
  r.q = qs.q;
  const FrequencyContext fe = f.with_eps(eta);
  ExpansionContext<double> ctx(fe, cut, cat, qs.q);
  RecursionOracle<double> oracle(ctx);
  const Coefficients<double> u = oracle.solve(K).truncated(eta);
  Coefficients<double> F;
  add_cubic(u, u, u, 1.0, F);
  std::set<ModeKey> keys;
  for (const auto& kv : u) keys.insert(kv.first);
  for (const auto& kv : F) keys.insert(kv.first);
  const double omega = fe.omega();
  for (const ModeKey& x : keys) {
    const long p = norm2(x.second);
    auto iu = u.find(x);
    auto iF = F.find(x);
    const double uv = iu == u.end() ? 0.0 : iu->second;
    const double Fv = iF == F.end() ? 0.0 : iF->second;
    const double lin = std::pow(static_cast<double>(p), f.s) * (-omega * x.first + p + fe.mu) * uv;
    const double res = std::fabs(lin - eta * Fv);
    if (ExpansionContext<double>::is_q_mode(x.first, x.second, f.D))
      r.max_kernel_residual = std::max(r.max_kernel_residual, res);
    else
      r.max_residual = std::max(r.max_residual, res);
  }
  r.modes = static_cast<long>(keys.size());
  return r;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw ConfigError("residual", "slope fit needs at least two samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] <= 0 || y[i] <= 0) throw InvariantViolation("residual", "non-positive sample in log-log fit");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i)
    g.push_back(n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1)));
  return g;
}

ResidualReport residual_scan(const std::vector<double>& etas, int K, const FrequencyContext& f, const CutoffSpec& cut,
                             std::shared_ptr<const ClusterCatalog> cat) {
  ResidualReport rep;
  rep.K = K;
  std::vector<double> x, y;
  for (double eta : etas) {
    rep.samples.push_back(residual_at(eta, K, f, cut, cat));
    x.push_back(eta);
    y.push_back(rep.samples.back().max_residual);
  }
  rep.slope = loglog_slope(x, y);
  return rep;
}

double reconstruct(const Coefficients<double>& u, const std::vector<double>& x, double t, int D) {
  // (2i)^{-D} = 2^{-D} i^{-D}; i^{-D} cycles through 1, -i, -1, i.
  double re = 0.0, im = 0.0;
  for (const auto& [k, v] : u) {
    double ph = k.first * t;
    for (int i = 0; i < D; ++i) ph += k.second[i] * x[i];
    re += v * std::cos(ph);
    im += v * std::sin(ph);
  }
  const double scale = std::ldexp(1.0, -D);
  switch (((D % 4) + 4) % 4) {
    case 0: return scale * re;
    case 1: return scale * im;   // -i (re + i im) = im - i re
    case 2: return -scale * re;
    default: return -scale * im;
  }
}

FixpointReport compatibility_fixpoint(double eps, int K, const FrequencyContext& f, const CutoffSpec& cut,
                                      std::shared_ptr<const ClusterCatalog> cat, const FixpointOptions& opt) {
  FixpointReport rep;
  const FrequencyContext fe = f.with_eps(eps);
  const double q = opt.q > 0 ? opt.q : std::sqrt(leading_q_squared(f.D, std::round(f.s)).get_d());
  std::set<BlockKey> blocks;
  {
    ExpansionContext<double> ctx(fe, cut, cat, q);
    TreeExpansion<double> te(ctx, TreeMode::Renormalized, nullptr, K);
    for (int k = 1; k <= K; ++k)
      for (const auto& [n, m] : te.support(k)) {
        const ClusterRef ref = cat->locate(m).first;
        if (!ctx.excluded_block(n, ref) && ctx.in_omega(n, ref)) blocks.emplace(n, ref);
      }
    for (const auto& key : omega_blocks(f, *cat, opt.n_max))
      if (ctx.in_omega(key.first, key.second)) blocks.insert(key);
  }
  double prev = -1.0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    ExpansionContext<double> ctx(fe, cut, cat, q);
    const auto Mcur = rep.M;
    ctx.set_counterterms([Mcur](long n, const ClusterRef& j) {
      auto i = Mcur.find({n, j});
      return i == Mcur.end() ? Matrix<double>() : i->second;
    });
    const NuLookup nu = [&](long n, const ClusterRef& j) -> std::optional<double> {
      if (!blocks.count({n, j})) return 0.0;
      return ctx.propagator(n, j).state.nu;
    };
    const DiophantineWitness w = check_melnikov_second(eps, nu, fe, *cat);
    if (!w.ok)
      throw MelnikovFailure("compatibility", "second Melnikov condition fails at n=" + std::to_string(w.n) +
                                                 " p=" + std::to_string(w.p) + " for eps=" + std::to_string(eps));
    TreeExpansion<double> te(ctx, TreeMode::Renormalized, nullptr, K);
    CountertermTable<double> table([&](int k, long n, const ClusterRef& j) { return te.family_sums(k, n, j); },
                                   [&](long n, const ClusterRef& j) { return ctx.in_omega(n, j); }, f.D);
    std::map<BlockKey, Matrix<double>> next;
    double step = 0.0;
    for (const auto& [n, j] : blocks) {
      const int d = cat->cluster(j).d();
      const DivisorState& st = ctx.propagator(n, j).state;
      Matrix<double> Mn(d, d);
      double w_eta = 1.0;
      for (int k = 1; k <= K; ++k) {
        w_eta *= eps;
        Mn += w_eta * table.assembled(k, n, j, st.x, st.y, cut, d);
      }
      auto old = rep.M.find({n, j});
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          step = std::max(step, std::fabs(Mn(a, b) - (old == rep.M.end() ? 0.0 : old->second(a, b))));
      next.emplace(BlockKey{n, j}, std::move(Mn));
    }
    rep.M = std::move(next);
    rep.iterations = it;
    rep.steps.push_back(step);
    if (prev > 0.0) rep.ratios.push_back(step / prev);
    prev = step;
    rep.residual = step;
    if (step <= opt.tol) break;
    if (it == opt.max_iter) throw NoConvergence("compatibility", "fixpoint iteration did not settle");
  }
  for (const auto& [key, M] : rep.M)
    for (std::size_t a = 0; a < M.rows(); ++a)
      for (std::size_t b = 0; b < M.cols(); ++b) rep.norm = std::max(rep.norm, std::fabs(M(a, b)));
  rep.bound = opt.K2 * eps;
  if (rep.norm > rep.bound)
    throw BoundViolation("compatibility", "|M| = " + std::to_string(rep.norm) + " exceeds K2 eps");
  return rep;
}

template void add_cubic<double>(const Coefficients<double>&, const Coefficients<double>&,
                                const Coefficients<double>&, const double&, Coefficients<double>&);
template void add_cubic<Rational>(const Coefficients<Rational>&, const Coefficients<Rational>&,
                                  const Coefficients<Rational>&, const Rational&, Coefficients<Rational>&);
template Coefficients<double> leading_coefficients<double>(int, const double&);
template Coefficients<Rational> leading_coefficients<Rational>(int, const Rational&);
template struct SeriesSolution<double>;
template struct SeriesSolution<Rational>;
template class RecursionOracle<double>;
template class RecursionOracle<Rational>;

}  // namespace lindstedt
