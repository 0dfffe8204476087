#include "lindstedt/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "lindstedt/errors.hpp"

namespace lindstedt {

namespace {

void sphere_rec(int D, int pos, long rest, bool positive, IVec& cur, std::vector<IVec>& out) {
  if (pos == D - 1) {
    long r = static_cast<long>(std::llround(std::sqrt(static_cast<double>(rest))));
    while (r * r > rest) --r;
    while ((r + 1) * (r + 1) <= rest) ++r;
    if (r * r != rest) return;
    if (r == 0) {
      if (!positive) {
        cur[pos] = 0;
        out.push_back(cur);
      }
      return;
    }
    if (!positive) {
      cur[pos] = static_cast<int>(-r);
      out.push_back(cur);
    }
    cur[pos] = static_cast<int>(r);
    out.push_back(cur);
    return;
  }
  long r = static_cast<long>(std::sqrt(static_cast<double>(rest))) + 1;
  for (long x = positive ? 1 : -r; x <= r; ++x) {
    if (x * x > rest) continue;
    cur[pos] = static_cast<int>(x);
    sphere_rec(D, pos + 1, rest - x * x, positive, cur, out);
  }
  cur[pos] = 0;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Components listed by their smallest member index, members in input order.
std::vector<std::vector<int>> components(UnionFind& uf, std::size_t n) {
  std::map<int, std::vector<int>> comp;
  for (std::size_t i = 0; i < n; ++i) comp[uf.find(static_cast<int>(i))].push_back(static_cast<int>(i));
  std::vector<std::vector<int>> out;
  for (auto& [root, v] : comp) out.push_back(std::move(v));
  return out;
}

double diameter(const std::vector<IVec>& pts) {
  double d = 0.0;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) d = std::max(d, dist(pts[a], pts[b]));
  return d;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

std::vector<IVec> enumerate_sphere(long p, int D, bool positive_sector) {
  std::vector<IVec> out;
  if (p < 0 || D < 1 || D > kMaxDim) return out;
  IVec cur;
  sphere_rec(D, 0, p, positive_sector, cur, out);
  return out;
}

double sphere_beta(int D, double alpha) {
  if (D == 2) return 1.0 / 3.0;
  return 2.0 * alpha / (2.0 * D + factorial(D + 2) * D * D);
}

ClusterConstants ClusterConstants::defaults(int D, double alpha) {
  ClusterConstants c;
  c.alpha = alpha;
  c.beta = sphere_beta(D, alpha);
  if (D == 2) {
    c.C1 = 2.0;
    c.C2 = 0.35;
    c.max_size = 2;
  } else {
    c.C1 = 1.0;
    c.C2 = 1.0;
    c.max_size = 0;
  }
  return c;
}

int SphereCluster::index_of(const IVec& m) const {
  auto it = std::lower_bound(members.begin(), members.end(), m);
  if (it == members.end() || *it != m) return -1;
  return static_cast<int>(it - members.begin());
}

std::vector<SphereCluster> cluster_sphere(const std::vector<IVec>& points,
                                          const ClusterConstants& cc, int D) {
  std::vector<SphereCluster> out;
  if (points.empty()) return out;
  const long p = norm2(points.front());
  for (const IVec& m : points)
    if (norm2(m) != p) throw InvariantViolation("cluster_sphere", "points are not on one sphere");
  const double thr = cc.C2 * std::pow(static_cast<double>(std::max(p, 1L)), cc.beta);
  UnionFind uf(points.size());
  for (std::size_t a = 0; a < points.size(); ++a)
    for (std::size_t b = a + 1; b < points.size(); ++b)
      if (dist(points[a], points[b]) < thr) uf.unite(static_cast<int>(a), static_cast<int>(b));
  for (const auto& comp : components(uf, points.size())) {
    SphereCluster c;
    c.p = p;
    for (int i : comp) c.members.push_back(points[i]);
    std::sort(c.members.begin(), c.members.end());
    c.diam = diameter(c.members);
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(),
            [](const SphereCluster& a, const SphereCluster& b) { return a.members.front() < b.members.front(); });
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].j = static_cast<int>(i);
    double sep = -1.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (k == i) continue;
      for (const IVec& x : out[i].members)
        for (const IVec& y : out[k].members) {
          double d = dist(x, y);
          if (sep < 0 || d < sep) sep = d;
        }
    }
    out[i].min_separation = sep;
  }
  ClusterCheck chk = check_sphere_clusters(out, cc, D);
  if (!chk.ok) throw InvariantViolation("cluster_sphere", chk.failure);
  return out;
}

ClusterCheck check_sphere_clusters(const std::vector<SphereCluster>& cl,
                                   const ClusterConstants& cc, int D) {
  ClusterCheck r;
  auto fail = [&](const std::string& why) {
    if (r.ok) {
      r.ok = false;
      r.failure = why;
    }
  };
  std::set<IVec> seen;
  for (const SphereCluster& c : cl) {
    const double pj = static_cast<double>(std::max(c.p, 1L));
    std::ostringstream tag;
    tag << "p=" << c.p << " j=" << c.j << ": ";
    for (const IVec& m : c.members) {
      if (norm2(m) != c.p) fail(tag.str() + "member off the sphere");
      if (!seen.insert(m).second) fail(tag.str() + "member appears twice");
    }
    if (c.d() > cc.C1 * std::pow(pj, cc.alpha)) fail(tag.str() + "cluster too large");
    if (D == 2 && cc.max_size > 0 && c.d() > cc.max_size) fail(tag.str() + "more than two points");
    if (c.min_separation >= 0 && c.min_separation < cc.C2 * std::pow(pj, cc.beta))
      fail(tag.str() + "clusters too close");
    if (c.diam > cc.C1 * cc.C2 * std::pow(pj, cc.alpha + cc.beta)) fail(tag.str() + "diameter too large");
    if (c.d() > 1) {
      const double thr = cc.C2 * std::pow(pj, cc.beta);
      for (const IVec& x : c.members) {
        bool near = false;
        for (const IVec& y : c.members)
          if (x != y && dist(x, y) < thr) near = true;
        if (!near) fail(tag.str() + "member without a close neighbour");
      }
    }
  }
  return r;
}

const std::vector<SphereCluster>& ClusterCatalog::sphere(long p) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = spheres_.find(p);
  if (it != spheres_.end()) return *it->second;
  auto cl = std::make_unique<std::vector<SphereCluster>>(cluster_sphere(enumerate_sphere(p, D_), cc_, D_));
  auto& ref = *cl;
  spheres_.emplace(p, std::move(cl));
  return ref;
}

std::pair<ClusterRef, int> ClusterCatalog::locate(const IVec& m) const {
  const long p = norm2(m);
  const auto& cl = sphere(p);
  for (const SphereCluster& c : cl) {
    int a = c.index_of(m);
    if (a >= 0) return {ClusterRef{p, c.j}, a};
  }
  throw InvariantViolation("ClusterCatalog", "vector " + to_string(m, D_) + " not in its sphere partition");
}

bool omega_membership(long n, long p, double mu, double eps0, int D) {
  if (n == 1 && p == D) return false;
  const double lo = -0.5 + (D + mu - eps0) * static_cast<double>(n);
  const double hi = (D + mu) * static_cast<double>(n) + 0.5;
  return lo < static_cast<double>(p) && static_cast<double>(p) < hi;
}

double bourgain_beta(int D, double alpha) {
  const double f = 1.0 + std::pow(2.0, D - 1) * factorial(D) * factorial(D + 1);
  return alpha / (f * D);
}

BourgainConstants BourgainConstants::defaults(int D, double alpha) {
  BourgainConstants b;
  b.alpha = alpha;
  b.beta = bourgain_beta(D, alpha);
  // Edges at distance sqrt(2) in (m, |m|^2) join neighbours whose squared norms differ by at most
  // one. The largest cells sit next to the origin (12 points at p = 4 for D = 2, 72 for D = 3).
  // C1 is calibrated on balls of radius 40 (D = 2) and 12 (D = 3), where size / p^alpha peaks
  // at 9.09 and 43.1 and stays there as the radius grows.
  b.C2 = 1.5;
  if (D == 2) b.C1 = 10.0;
  else if (D == 3) b.C1 = 45.0;
  else b.C1 = std::pow(3.0, D) * std::pow(2.0, D - 1);
  return b;
}

namespace {
double phi_dist(const IVec& a, const IVec& b) {
  const double dm = static_cast<double>(norm2(a - b));
  const double dp = static_cast<double>(norm2(a) - norm2(b));
  return std::sqrt(dm + dp * dp);
}
double cell_weight(long p, double beta) { return std::pow(static_cast<double>(std::max(p, 1L)), beta); }
}  // namespace

std::vector<BourgainCell> bourgain_partition(const std::vector<IVec>& modes,
                                             const BourgainConstants& bc, int D) {
  std::vector<IVec> pts = modes;
  std::sort(pts.begin(), pts.end());
  if (std::adjacent_find(pts.begin(), pts.end()) != pts.end())
    throw DuplicateInput("bourgain_partition", "the same vector appears twice");
  UnionFind uf(pts.size());
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      const long pmin = std::min(norm2(pts[a]), norm2(pts[b]));
      if (phi_dist(pts[a], pts[b]) < bc.C2 * cell_weight(pmin, bc.beta))
        uf.unite(static_cast<int>(a), static_cast<int>(b));
    }
  std::vector<BourgainCell> out;
  for (const auto& comp : components(uf, pts.size())) {
    BourgainCell c;
    long pmin = -1;
    for (int i : comp) {
      c.members.push_back(pts[i]);
      long q = norm2(pts[i]);
      if (pmin < 0 || q < pmin) pmin = q;
    }
    c.p = std::max(pmin, 1L);
    c.diam = diameter(c.members);
    c.j = static_cast<int>(out.size());
    out.push_back(std::move(c));
  }
  ClusterCheck chk = check_bourgain_cells(out, bc, D);
  if (!chk.ok) throw InvariantViolation("bourgain_partition", chk.failure);
  return out;
}

ClusterCheck check_bourgain_cells(const std::vector<BourgainCell>& cells,
                                  const BourgainConstants& bc, int) {
  ClusterCheck r;
  auto fail = [&](const std::string& why) {
    if (r.ok) {
      r.ok = false;
      r.failure = why;
    }
  };
  for (const BourgainCell& c : cells) {
    const double pj = static_cast<double>(c.p);
    if (c.members.size() > bc.C1 * std::pow(pj, bc.alpha)) fail("cell " + std::to_string(c.j) + " too large");
    if (!(c.diam < bc.C1 * bc.C2 * std::pow(pj, bc.alpha + bc.beta)))
      fail("cell " + std::to_string(c.j) + " diameter too large");
  }
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t k = i + 1; k < cells.size(); ++k) {
      const double need = bc.C2 * std::min(cell_weight(cells[i].p, bc.beta), cell_weight(cells[k].p, bc.beta));
      for (const IVec& x : cells[i].members)
        for (const IVec& y : cells[k].members)
          if (phi_dist(x, y) < need)
            fail("cells " + std::to_string(i) + " and " + std::to_string(k) + " too close");
    }
  return r;
}

std::vector<IVec> ball_points(int D, double radius) {
  std::vector<IVec> out;
  const long r2 = static_cast<long>(std::floor(radius * radius + 1e-9));
  for (long p = 0; p <= r2; ++p) {
    auto s = enumerate_sphere(p, D);
    out.insert(out.end(), s.begin(), s.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ResonantCell> build_resonant_cells(const std::vector<BourgainCell>& cells,
                                               double eps0, int D) {
  std::vector<ResonantCell> out;
  for (const BourgainCell& c : cells) {
    ResonantCell rc;
    rc.j = c.j;
    for (const IVec& m : c.members) {
      const long p = norm2(m);
      const long nlo = std::max(1L, static_cast<long>(std::ceil((p - 0.5) / D)));
      const long nhi = static_cast<long>(std::floor((p + 0.5) / (D - eps0)));
      for (long n = nlo; n <= nhi; ++n) {
        if (D * n == p) continue;
        const double lo = -0.5 + (D - eps0) * static_cast<double>(n);
        const double hi = D * static_cast<double>(n) + 0.5;
        if (lo <= p && p <= hi) rc.members.push_back(Mode{n, m});
      }
    }
    if (!rc.members.empty()) out.push_back(std::move(rc));
  }
  return out;
}

}  // namespace lindstedt
