#include "lindstedt/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>

#include "lindstedt/errors.hpp"
#include "lindstedt/lattice.hpp"

namespace lindstedt {

namespace {

IVec abs_vec(const IVec& m) {
  IVec r = m;
  for (int i = 0; i < kMaxDim; ++i) r[i] = std::abs(r[i]);
  return r;
}

bool same_abs(const IVec& a, const IVec& b) { return abs_vec(a) == abs_vec(b); }

bool has_zero_component(const IVec& m, int D) {
  for (int i = 0; i < D; ++i)
    if (m[i] == 0) return true;
  return false;
}

long pow_long(long b, int e) {
  long r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// |m|^{2+2s}
double weight(const IVec& m, double s) { return std::pow(static_cast<double>(norm2(m)), 1.0 + s); }
Rational weight_exact(const IVec& m, double s) { return int_pow<Rational>(norm2(m), static_cast<int>(std::lround(1.0 + s))); }

std::string vec_str(const IVec& m, int D) {
  std::string s = "(";
  for (int i = 0; i < D; ++i) s += (i ? "," : "") + std::to_string(m[i]);
  return s + ")";
}

}  // namespace

std::vector<IVec> sign_orbit(const IVec& m, int D) {
  std::set<IVec> out;
  for (int mask = 0; mask < (1 << D); ++mask) {
    IVec x = m;
    for (int i = 0; i < D; ++i)
      if ((mask >> i) & 1) x[i] = -x[i];
    out.insert(x);
  }
  return {out.begin(), out.end()};
}

std::vector<IVec> full_support(const PacketSet& P) {
  std::set<IVec> out;
  for (const IVec& m : P.members)
    for (const IVec& x : sign_orbit(m, P.D)) out.insert(x);
  return {out.begin(), out.end()};
}

int sign_of(const IVec& m, int D) {
  int s = 1;
  for (int i = 0; i < D; ++i) {
    if (m[i] == 0) return 0;
    if (m[i] < 0) s = -s;
  }
  return s;
}

bool alphas_admissible(const std::vector<double>& alphas, int D, double s, int N) {
  if (static_cast<int>(alphas.size()) != N - 1) return false;
  double prev = 1.0, sum = 0.0;
  for (double a : alphas) {
    if (!(a > prev)) return false;
    prev = a;
    sum += std::pow(a, 2.0 + 2.0 * s);
  }
  return std::ldexp(sum, D + 1) <= std::pow(3.0, D) + std::ldexp(static_cast<double>(N - 2), D + 1);
}

PacketCheck check_divisibility(const PacketSet& P) {
  PacketCheck c;
  for (const IVec& m : P.members) {
    if (norm2(m) % P.D != 0 || has_zero_component(m, P.D)) {
      c.ok = false;
      c.failure = "member " + vec_str(m, P.D) + " is not a positive kernel mode";
      c.witness = {m};
      return c;
    }
    for (int i = 0; i < P.D; ++i)
      if (m[i] < 0) {
        c.ok = false;
        c.failure = "member " + vec_str(m, P.D) + " lies outside the positive sector";
        return c;
      }
  }
  for (std::size_t i = 0; i < P.members.size(); ++i)
    for (std::size_t j = i + 1; j < P.members.size(); ++j)
      if (P.members[i] == P.members[j]) {
        c.ok = false;
        c.failure = "repeated member";
        return c;
      }
  return c;
}

PacketCheck check_condition_a(const PacketSet& P) {
  PacketCheck c;
  if (P.members.empty()) return c;
  const int N = P.N();
  std::size_t i1 = 0;
  for (std::size_t i = 1; i < P.members.size(); ++i)
    if (norm2(P.members[i]) < norm2(P.members[i1])) i1 = i;
  const long c3 = pow_long(3, P.D), c2 = pow_long(2, P.D + 1);
  bool lhs_le;
  if (is_integral(P.s)) {
    Rational lhs = 0;
    for (std::size_t i = 0; i < P.members.size(); ++i)
      if (i != i1) lhs += weight_exact(P.members[i], P.s);
    lhs *= c2;
    const Rational rhs = Rational(c3 + c2 * (N - 2)) * weight_exact(P.members[i1], P.s);
    lhs_le = lhs <= rhs;
  } else {
    double lhs = 0;
    for (std::size_t i = 0; i < P.members.size(); ++i)
      if (i != i1) lhs += weight(P.members[i], P.s);
    lhs_le = c2 * lhs <= (c3 + c2 * (N - 2)) * weight(P.members[i1], P.s) * (1 + 1e-12);
  }
  if (!lhs_le) {
    c.ok = false;
    c.failure = "condition (a) fails: the outer members are too large relative to the smallest";
  }
  return c;
}

PacketCheck check_condition_b(const PacketSet& P) {
  PacketCheck c;
  const std::vector<IVec> M = full_support(P);
  for (const IVec& m1 : M)
    for (const IVec& m2 : M)
      for (const IVec& m3 : M) {
        if (m1 == m3 || m2 == m3) continue;
        if (dot(m1 - m3, m2 - m3) != 0) continue;
        if (same_abs(m1, m2) && same_abs(m2, m3)) continue;
        c.ok = false;
        c.failure = "condition (b) fails on the triple " + vec_str(m1, P.D) + " " + vec_str(m2, P.D) + " " +
                    vec_str(m3, P.D);
        c.witness = {m1, m2, m3};
        return c;
      }
  return c;
}

PacketCheck check_packet(const PacketSet& P) {
  for (auto f : {check_divisibility, check_condition_a, check_condition_b}) {
    PacketCheck c = f(P);
    if (!c.ok) return c;
  }
  PacketCheck c;
  try {
    (void)amplitudes(P);
  } catch (const NegativeAmplitudeSquare& e) {
    c.ok = false;
    c.failure = e.what();
  }
  return c;
}

namespace {

// y lies on one of the two planes orthogonal to m - m' through m or m', or on the sphere of diameter m - m'.
bool on_plane_or_sphere(const IVec& y, const IVec& m, const IVec& mp) {
  const IVec w = m - mp;
  return dot(y - m, w) == 0 || dot(y - mp, w) == 0 || dot(y - m, y - mp) == 0;
}

bool orbit_avoids(const IVec& x, const std::vector<IVec>& U, int D) {
  for (const IVec& y : sign_orbit(x, D))
    for (std::size_t i = 0; i < U.size(); ++i)
      for (std::size_t j = i + 1; j < U.size(); ++j)
        if (on_plane_or_sphere(y, U[i], U[j])) return false;
  return true;
}

std::vector<IVec> shell_candidates(int D, double lo, double hi) {
  std::vector<IVec> out;
  const long pmin = static_cast<long>(std::ceil(lo * lo - 1e-9));
  const long pmax = static_cast<long>(std::floor(hi * hi + 1e-9));
  for (long p = std::max(pmin, 1L); p <= pmax; ++p) {
    if (p % D) continue;
    for (const IVec& x : enumerate_sphere(p, D, true)) out.push_back(x);
  }
  return out;
}

}  // namespace

PacketSet construct_packet(const PacketOptions& opt) {
  if (opt.N < 1) throw ConfigError("packet", "N must be positive");
  if (opt.D < 1 || opt.D > kMaxDim) throw ConfigError("packet", "D out of range");
  std::vector<double> alphas = opt.alphas;
  if (alphas.empty() && opt.N > 1) {
    const double amax = std::pow((std::pow(3.0, opt.D) + std::ldexp(opt.N - 2.0, opt.D + 1)) /
                                     std::ldexp(opt.N - 1.0, opt.D + 1),
                                 1.0 / (2.0 + 2.0 * opt.s));
    for (int i = 2; i <= opt.N; ++i) alphas.push_back(1.0 + (amax - 1.0) * 0.999 * (i - 1) / (opt.N - 1));
  }
  if (!alphas_admissible(alphas, opt.D, opt.s, opt.N))
    throw ConfigError("packet", "shell parameters must increase from 1 and satisfy the packet size constraint");
  const long p_lo = std::max<long>(opt.D, static_cast<long>(std::ceil(opt.r_min * opt.r_min - 1e-9)));
  const long p_hi = static_cast<long>(std::floor(opt.r_max * opt.r_max));
  for (long p1 = p_lo; p1 <= p_hi; ++p1) {
    if (p1 % opt.D) continue;
    for (const IVec& m1 : enumerate_sphere(p1, opt.D, true)) {
      PacketSet P;
      P.D = opt.D;
      P.s = opt.s;
      P.alphas = alphas;
      P.r = std::sqrt(static_cast<double>(p1));
      P.members = {m1};
      std::vector<IVec> U = sign_orbit(m1, opt.D);
      bool ok = true;
      for (int i = 2; i <= opt.N && ok; ++i) {
        const double lo = (i == 2 ? 1.0 : alphas[i - 3]) * P.r;
        const double hi = alphas[i - 2] * P.r;
        ok = false;
        for (const IVec& x : shell_candidates(opt.D, lo, hi)) {
          if (std::any_of(U.begin(), U.end(), [&](const IVec& y) { return same_abs(x, y); })) continue;
          if (!orbit_avoids(x, U, opt.D)) continue;
          PacketSet T = P;
          T.members.push_back(x);
          if (!check_condition_b(T).ok) continue;
          P = std::move(T);
          for (const IVec& y : sign_orbit(x, opt.D)) U.push_back(y);
          ok = true;
          break;
        }
      }
      if (ok && check_packet(P).ok) return P;
    }
  }
  throw SearchExhausted("packet", "no admissible packet with |m_1| <= " + std::to_string(opt.r_max));
}

Amplitudes amplitudes(const PacketSet& P) {
  Amplitudes out;
  const int N = P.N();
  if (N == 0) return out;
  const long c3 = pow_long(3, P.D), c2 = pow_long(2, P.D + 1);
  for (const IVec& m : P.members) out.M += weight(m, P.s);
  out.A2 = out.M / (P.D * (c2 * (N - 1) + c3));
  if (is_integral(P.s)) {
    Rational M = 0;
    for (const IVec& m : P.members) M += weight_exact(m, P.s);
    Rational A2 = M / Rational(P.D * (c2 * (N - 1) + c3));
    A2.canonicalize();
    out.A2_exact = A2;
    for (const IVec& m : P.members) {
      Rational a2 = (weight_exact(m, P.s) / P.D - c2 * A2) / Rational(c3 - c2);
      a2.canonicalize();
      out.a2_exact.push_back(a2);
    }
  }
  for (std::size_t i = 0; i < P.members.size(); ++i) {
    const double a2 = out.a2_exact.empty() ? (weight(P.members[i], P.s) / P.D - c2 * out.A2) / (c3 - c2)
                                           : out.a2_exact[i].get_d();
    const bool neg = out.a2_exact.empty() ? a2 <= 0 : sgn(out.a2_exact[i]) <= 0;
    if (neg)
      throw NegativeAmplitudeSquare("amplitudes", "a^2 <= 0 for member " + vec_str(P.members[i], P.D) +
                                                      ": the smallest modulus condition fails");
    out.a2.push_back(a2);
    out.a.push_back(std::sqrt(a2));
  }
  return out;
}

namespace {

struct PacketIndex {
  std::map<IVec, int> index;  // |m| representative -> member index
  explicit PacketIndex(const PacketSet& P) {
    for (int i = 0; i < P.N(); ++i) index[P.members[i]] = i;
  }
  int of(const IVec& m) const {
    auto it = index.find(abs_vec(m));
    return it == index.end() ? -1 : it->second;
  }
};

}  // namespace

BifurcationResidual bifurcation_residual(const PacketSet& P, const Amplitudes& amp) {
  BifurcationResidual r;
  const std::vector<IVec> M = full_support(P);
  const PacketIndex idx(P);
  r.exact = is_integral(P.s) && !amp.a2_exact.empty();
  // Residual per target mode, as a polynomial in the a_i with squares reduced.
  std::map<IVec, std::map<std::vector<int>, Rational>> poly;
  std::map<IVec, double> num;
  auto add = [&](const IVec& m, std::vector<int> ids, int sign, const Rational& c) {
    std::sort(ids.begin(), ids.end());
    Rational coef = c * sign;
    std::vector<int> mono;
    for (std::size_t i = 0; i < ids.size();) {
      if (i + 1 < ids.size() && ids[i] == ids[i + 1]) {
        coef *= amp.a2_exact[ids[i]];
        i += 2;
      } else {
        mono.push_back(ids[i]);
        ++i;
      }
    }
    poly[m][mono] += coef;
  };
  for (const IVec& m : M) {
    const int i = idx.of(m);
    if (r.exact) add(m, {i}, sign_of(m, P.D), weight_exact(m, P.s) / P.D);
    num[m] += sign_of(m, P.D) * amp.a[i] * weight(m, P.s) / P.D;
  }
  for (const IVec& m1 : M)
    for (const IVec& m2 : M)
      for (const IVec& m3 : M) {
        if (dot(m1 - m3, m2 - m3) != 0) continue;
        const IVec m = m1 + m2 - m3;
        ++r.triples;
        const int sg = sign_of(m1, P.D) * sign_of(m2, P.D) * sign_of(m3, P.D);
        const int i1 = idx.of(m1), i2 = idx.of(m2), i3 = idx.of(m3);
        if (r.exact) add(m, {i1, i2, i3}, -sg, Rational(1));
        num[m] -= sg * amp.a[i1] * amp.a[i2] * amp.a[i3];
      }
  r.modes = static_cast<long>(num.size());
  for (const auto& [m, v] : num) r.max_abs = std::max(r.max_abs, std::fabs(v));
  if (r.exact) {
    r.zero = true;
    for (const auto& [m, p] : poly)
      for (const auto& [mono, c] : p)
        if (sgn(c) != 0) r.zero = false;
  } else {
    r.zero = r.max_abs <= 1e-9 * std::max(1.0, amp.M);
  }
  return r;
}

BifurcationResidual amplitude_residual(const PacketSet& P, const Amplitudes& amp) {
  BifurcationResidual r;
  const long c3 = pow_long(3, P.D), c2 = pow_long(2, P.D + 1);
  r.exact = amp.A2_exact.has_value();
  r.modes = P.N();
  r.zero = true;
  if (r.exact) {
    Rational sum = 0;
    for (int i = 0; i < P.N(); ++i) {
      const Rational e = weight_exact(P.members[i], P.s) / P.D - c2 * *amp.A2_exact - (c3 - c2) * amp.a2_exact[i];
      if (sgn(e) != 0) r.zero = false;
      r.max_abs = std::max(r.max_abs, std::fabs(e.get_d()));
      sum += amp.a2_exact[i];
    }
    if (sum != *amp.A2_exact) r.zero = false;
  } else {
    double sum = 0;
    for (int i = 0; i < P.N(); ++i) {
      const double e = weight(P.members[i], P.s) / P.D - c2 * amp.A2 - (c3 - c2) * amp.a2[i];
      r.max_abs = std::max(r.max_abs, std::fabs(e));
      sum += amp.a2[i];
    }
    r.max_abs = std::max(r.max_abs, std::fabs(sum - amp.A2));
    r.zero = r.max_abs <= 1e-9 * std::max(1.0, amp.M);
  }
  return r;
}

JOperator::JOperator(const PacketSet& P, const Amplitudes& amp) : P_(P), support_(full_support(P)), A2_(amp.A2) {
  const PacketIndex idx(P);
  for (const IVec& m : support_) q_[m] = sign_of(m, P.D) * amp.a[idx.of(m)];
}

bool JOperator::is_kernel_mode(const IVec& m) const {
  for (int i = 0; i < P_.D; ++i)
    if (m[i] <= 0) return false;
  return norm2(m) % P_.D == 0;
}

double JOperator::q0(const IVec& m) const {
  auto it = q_.find(m);
  return it == q_.end() ? 0.0 : it->second;
}

double JOperator::entry(const IVec& m, const IVec& mp) const {
  double v = m == mp ? weight(m, P_.s) / P_.D : 0.0;
  for (const IVec& x : sign_orbit(mp, P_.D)) {
    const int sg = sign_of(x, P_.D);
    double d = 0.0;
    for (const IVec& m3 : support_) {
      const IVec m2 = m - x + m3;
      auto it = q_.find(m2);
      if (it == q_.end() || dot(x - m3, m2 - m3) != 0) continue;
      d += 2.0 * it->second * q_.at(m3);
    }
    for (const IVec& m1 : support_) {
      const IVec m2 = m + x - m1;
      auto it = q_.find(m2);
      if (it == q_.end() || dot(m1 - x, m2 - x) != 0) continue;
      d += q_.at(m1) * it->second;
    }
    v -= sg * d;
  }
  return v;
}

std::vector<IVec> JOperator::neighbours(const IVec& m) const {
  std::set<IVec> out;
  for (const IVec& a : support_)
    for (const IVec& b : support_) {
      // m'' + a - b = m with <m'' - b, a - b> = 0
      const IVec x1 = m - a + b;
      if (a != b && dot(x1 - b, a - b) == 0 && !has_zero_component(x1, P_.D)) out.insert(abs_vec(x1));
      // a + b - m'' = m with <a - m'', b - m''> = 0
      const IVec x2 = a + b - m;
      if (dot(a - x2, b - x2) == 0 && !has_zero_component(x2, P_.D)) out.insert(abs_vec(x2));
    }
  out.erase(abs_vec(m));
  return {out.begin(), out.end()};
}

JBlock block_of(const JOperator& J, const IVec& m, std::size_t bound) {
  JBlock b;
  std::set<IVec> seen{m};
  std::deque<IVec> todo{m};
  while (!todo.empty()) {
    const IVec x = todo.front();
    todo.pop_front();
    b.modes.push_back(x);
    if (b.modes.size() > bound)
      throw BlockBoundViolation("blocks", "block of " + vec_str(m, J.packet().D) + " exceeds " +
                                              std::to_string(bound) + " modes");
    for (const IVec& y : J.neighbours(x))
      if (seen.insert(y).second) todo.push_back(y);
  }
  std::sort(b.modes.begin(), b.modes.end());
  return b;
}

Matrix<double> restrict(const JOperator& J, const std::vector<IVec>& modes) {
  Matrix<double> R(modes.size(), modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i)
    for (std::size_t j = 0; j < modes.size(); ++j) R(i, j) = J.entry(modes[i], modes[j]);
  return R;
}

BlockPartition find_blocks(const JOperator& J, long p_max, std::size_t bound) {
  BlockPartition out;
  out.bound = bound;
  const int D = J.packet().D;
  const long L = static_cast<long>(full_support(J.packet()).size());
  out.log10_K = log10_chain_bound(L * (L - 1));
  std::map<IVec, std::size_t> owner;
  std::vector<IVec> window;
  for (long p = D; p <= p_max; p += D)
    for (const IVec& m : enumerate_sphere(p, D, true)) window.push_back(m);
  for (const IVec& m : window) {
    if (owner.count(m)) continue;
    JBlock b = block_of(J, m, bound);
    for (const IVec& x : b.modes) owner[x] = out.blocks.size();
    out.max_size = std::max(out.max_size, b.modes.size());
    out.blocks.push_back(std::move(b));
  }
  // Entries across distinct blocks vanish: every mode against every other mode of the window.
  if (window.size() <= 400) {
    for (const IVec& a : window)
      for (const IVec& b : window)
        if (owner[a] != owner[b] && J.entry(a, b) != 0.0) out.offblock_zero = false;
  } else {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> pick(0, window.size() - 1);
    for (int t = 0; t < 20000; ++t) {
      const IVec& a = window[pick(rng)];
      const IVec& b = window[pick(rng)];
      if (owner[a] != owner[b] && J.entry(a, b) != 0.0) out.offblock_zero = false;
    }
  }
  return out;
}

std::vector<Letter> alphabet(const PacketSet& P) {
  std::vector<Letter> out;
  const std::vector<IVec> M = full_support(P);
  for (const IVec& a : M)
    for (const IVec& b : M)
      if (a != b) out.push_back({a, b});
  return out;
}

double log10_chain_bound(long L) {
  double l = std::log10(2.0);
  for (long ell = 1; ell < L; ++ell) {
    if (l > 300.0) return std::numeric_limits<double>::infinity();
    const double K = std::pow(10.0, l);
    const double logN = K * std::log10(static_cast<double>(ell + 1));
    l += logN > 15.0 ? logN : std::log10(std::pow(10.0, logN) + 1.0);
  }
  return l;
}

ChainSample sample_chain(const std::vector<Letter>& A, const IVec& q0, int max_len, std::mt19937_64& rng, int D) {
  (void)D;
  ChainSample c;
  c.q0 = q0;
  c.points.push_back(q0);
  IVec q = q0;
  std::vector<int> ok;
  for (int step = 0; step < max_len; ++step) {
    ok.clear();
    for (int v = 0; v < static_cast<int>(A.size()); ++v)
      if (dot(q - A[v].second, A[v].w()) == 0) ok.push_back(v);
    if (ok.empty()) break;
    const int v = ok[std::uniform_int_distribution<std::size_t>(0, ok.size() - 1)(rng)];
    q = q + A[v].w();
    c.word.push_back(v);
    c.points.push_back(q);
  }
  return c;
}

bool has_loop(const std::vector<Letter>& A, const std::vector<int>& word, int D) {
  (void)D;
  std::set<IVec> prefix{IVec{}};
  IVec w{};
  for (int v : word) {
    w = w + A[v].w();
    if (!prefix.insert(w).second) return true;
  }
  return false;
}

LoopReport loop_scan(const PacketSet& P, const BlockPartition& blocks, long chains, int max_len, std::uint64_t seed,
                     long p_start) {
  LoopReport rep;
  rep.log10_K = blocks.log10_K;
  rep.max_block = blocks.max_size;
  const std::vector<Letter> A = alphabet(P);
  std::vector<IVec> starts;
  for (long p = P.D; p <= p_start; p += P.D)
    for (const IVec& m : enumerate_sphere(p, P.D, false))
      if (!has_zero_component(m, P.D)) starts.push_back(m);
  if (starts.empty()) return rep;
  std::map<IVec, std::size_t> owner;
  for (std::size_t b = 0; b < blocks.blocks.size(); ++b)
    for (const IVec& m : blocks.blocks[b].modes) owner[m] = b;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, starts.size() - 1);
  for (long c = 0; c < chains; ++c) {
    const ChainSample ch = sample_chain(A, starts[pick(rng)], max_len, rng, P.D);
    ++rep.chains;
    const long len = static_cast<long>(ch.word.size());
    rep.longest = std::max(rep.longest, len);
    const bool loop = has_loop(A, ch.word, P.D);
    if (!loop) rep.longest_loop_free = std::max(rep.longest_loop_free, len);
    if (std::isfinite(rep.log10_K) && std::log10(std::max(1.0, static_cast<double>(len))) >= rep.log10_K) {
      ++rep.long_chains;
      if (!loop) {
        ++rep.long_without_loop;
        rep.ok = false;
      }
    }
    // v0 a0 v0 patterns: <w(v0 a0), w(v0)> = 0.
    for (long i = 0; i < len; ++i)
      for (long j = i + 1; j < len; ++j) {
        if (ch.word[i] != ch.word[j]) continue;
        ++rep.repeats_checked;
        const IVec w = ch.points[j] - ch.points[i];
        if (dot(w, A[ch.word[i]].w()) != 0) {
          ++rep.repeat_failures;
          rep.ok = false;
        }
      }
    // A chain without a loop visits distinct points; all of them must sit in one block of J.
    std::set<std::size_t> owners;
    for (const IVec& q : ch.points) {
      if (has_zero_component(q, P.D)) continue;
      auto it = owner.find(abs_vec(q));
      if (it != owner.end()) owners.insert(it->second);
    }
    if (owners.size() > 1) rep.ok = false;
  }
  return rep;
}

long head_block_bound(const PacketSet& P, double A2) {
  return static_cast<long>(std::floor(16.0 * A2 * P.D * std::ldexp(1.0, P.D + 1) + 1e-9));
}

DetScan scan_J11(const PacketSet& P, const std::vector<double>& s_grid, long p_max) {
  DetScan out;
  if (p_max <= 0) p_max = head_block_bound(P, amplitudes(P).A2);
  std::vector<IVec> modes;
  for (long p = P.D; p <= p_max; p += P.D)
    for (const IVec& m : enumerate_sphere(p, P.D, true)) modes.push_back(m);
  // J11 is block diagonal along the link components inside the window, so its
  // determinant is the product of the component determinants.
  std::map<IVec, std::size_t> index;
  for (std::size_t i = 0; i < modes.size(); ++i) index[modes[i]] = i;
  std::vector<std::vector<IVec>> comps;
  {
    const JOperator J0(P, amplitudes(P));
    std::vector<int> comp(modes.size(), -1);
    for (std::size_t i = 0; i < modes.size(); ++i) {
      if (comp[i] >= 0) continue;
      const int c = static_cast<int>(comps.size());
      comps.emplace_back();
      std::vector<std::size_t> stack{i};
      comp[i] = c;
      while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        comps[c].push_back(modes[v]);
        for (const IVec& w : J0.neighbours(modes[v])) {
          const auto it = index.find(w);
          if (it != index.end() && comp[it->second] < 0) {
            comp[it->second] = c;
            stack.push_back(it->second);
          }
        }
      }
    }
  }
  bool all_zero = true;
  for (double s : s_grid) {
    PacketSet Ps = P;
    Ps.s = s;
    const JOperator J(Ps, amplitudes(Ps));
    LogDeterminant ld{1, 0.0};
    int diag_sign = 1;
    double log_diag = 0.0;
    for (const auto& block : comps) {
      const Matrix<double> R = restrict(J, block);
      const LogDeterminant b = log_determinant(R);
      ld.sign *= b.sign;
      ld.log10_abs += b.log10_abs;
      for (std::size_t i = 0; i < R.rows(); ++i) {
        if (R(i, i) < 0) diag_sign = -diag_sign;
        log_diag += R(i, i) == 0.0 ? 0.0 : std::log10(std::fabs(R(i, i)));
      }
    }
    const double ratio = ld.sign == 0 ? 0.0 : ld.sign * diag_sign * std::pow(10.0, ld.log10_abs - log_diag);
    DetSample d{s, ld.sign, ld.log10_abs, log_diag, ratio, modes.size()};
    if (std::fabs(ratio) > 1e-12) all_zero = false;
    if (!out.samples.empty()) {
      const DetSample& prev = out.samples.back();
      if (prev.sign != 0 && d.sign != prev.sign)
        out.zero_crossings.push_back(prev.s + (s - prev.s) * prev.ratio / (prev.ratio - d.ratio));
    }
    out.samples.push_back(d);
  }
  out.identically_zero = all_zero && !s_grid.empty();
  return out;
}

ResonantSeries resonant_series(const PacketSet& P, const Amplitudes& amp, double eps, int K, std::size_t block_bound) {
  ResonantSeries out;
  const int D = P.D;
  const JOperator J(P, amp);
  Coefficients<double> u0;
  for (const IVec& m : full_support(P)) u0[{norm2(m) / D, m}] = J.q0(m);
  out.orders.push_back(u0);
  auto cubic_sum = [&](int k, const std::vector<Coefficients<double>>& u) {
    Coefficients<double> F;
    for (int k1 = 0; k1 <= k; ++k1)
      for (int k2 = 0; k1 + k2 <= k; ++k2) add_cubic(u[k1], u[k2], u[k - k1 - k2], 1.0, F);
    return F;
  };
  for (int k = 1; k <= K; ++k) {
    const Coefficients<double> Fprev = cubic_sum(k - 1, out.orders);
    Coefficients<double> Pk;
    for (const auto& [x, v] : Fprev) {
      const long p = norm2(x.second);
      if (p == static_cast<long>(D) * x.first || has_zero_component(x.second, D) || v == 0.0) continue;
      const double delta = p - (D - eps) * x.first;
      if (std::fabs(delta) < 0.5)
        throw InvariantViolation("resonant_series", "divisor below the large-divisor window");
      Pk[x] = v / (std::pow(static_cast<double>(p), P.s) * delta);
    }
    std::vector<Coefficients<double>> trial = out.orders;
    trial.push_back(Pk);
    const Coefficients<double> R = cubic_sum(k, trial);
    std::set<IVec> rhs_modes;
    for (const auto& [x, v] : R)
      if (v != 0.0 && J.is_kernel_mode(x.second) && norm2(x.second) == static_cast<long>(D) * x.first)
        rhs_modes.insert(x.second);
    std::set<IVec> done;
    Coefficients<double> uk = Pk;
    for (const IVec& m : rhs_modes) {
      if (done.count(m)) continue;
      const JBlock b = block_of(J, m, block_bound);
      for (const IVec& x : b.modes) done.insert(x);
      out.largest_block = std::max(out.largest_block, b.modes.size());
      std::vector<double> rhs(b.modes.size(), 0.0);
      for (std::size_t i = 0; i < b.modes.size(); ++i) {
        auto it = R.find({norm2(b.modes[i]) / D, b.modes[i]});
        if (it != R.end()) rhs[i] = it->second;
      }
      const auto inv = try_inverse(restrict(J, b.modes));
      if (!inv) throw SingularSchurBlock("resonant_series", "singular block of J at " + vec_str(m, D));
      const std::vector<double> Q = *inv * rhs;
      ++out.blocks_solved;
      for (std::size_t i = 0; i < b.modes.size(); ++i) {
        if (Q[i] == 0.0) continue;
        const long n = norm2(b.modes[i]) / D;
        for (const IVec& y : sign_orbit(b.modes[i], D)) uk[{n, y}] += sign_of(y, D) * Q[i];
      }
    }
    out.orders.push_back(std::move(uk));
  }
  return out;
}

ResidualSample resonant_residual(const PacketSet& P, const Amplitudes& amp, double eta, int K) {
  ResidualSample r;
  r.eta = eta;
  const ResonantSeries S = resonant_series(P, amp, eta, K);
  Coefficients<double> u;
  double w = 1.0;
  for (const auto& ck : S.orders) {
    for (const auto& [x, v] : ck) u[x] += w * v;
    w *= eta;
  }
  Coefficients<double> F;
  add_cubic(u, u, u, 1.0, F);
  std::set<ModeKey> keys;
  for (const auto& kv : u) keys.insert(kv.first);
  for (const auto& kv : F) keys.insert(kv.first);
  for (const ModeKey& x : keys) {
    const long p = norm2(x.second);
    if (p == 0) continue;
    auto iu = u.find(x);
    auto iF = F.find(x);
    const double uv = iu == u.end() ? 0.0 : iu->second;
    const double Fv = iF == F.end() ? 0.0 : iF->second;
    const double res =
        std::fabs(std::pow(static_cast<double>(p), P.s) * (-(P.D - eta) * x.first + p) * uv - eta * Fv);
    if (p == static_cast<long>(P.D) * x.first)
      r.max_kernel_residual = std::max(r.max_kernel_residual, res);
    else
      r.max_residual = std::max(r.max_residual, res);
  }
  r.modes = static_cast<long>(keys.size());
  return r;
}

}  // namespace lindstedt
