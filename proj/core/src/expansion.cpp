#include <algorithm>
#include <cmath>

#include "lindstedt/trees.hpp"

namespace lindstedt {

template <class T>
ExpansionContext<T>::ExpansionContext(const FrequencyContext& f, const CutoffSpec& cut,
                                      std::shared_ptr<const ClusterCatalog> cat, T q)
    : freq_(f), cut_(cut), catalog_(std::move(cat)), q_(std::move(q)) {}

template <class T>
void ExpansionContext<T>::set_counterterms(BlockField<T> M) {
  std::lock_guard<std::mutex> lk(mu_);
  M_ = std::move(M);
  cache_.clear();
}

template <class T>
Matrix<T> ExpansionContext<T>::counterterm(long n, const ClusterRef& j) const {
  if (!M_ || !in_omega(n, j)) return {};
  return M_(n, j);
}

template <class T>
bool ExpansionContext<T>::in_omega(long n, const ClusterRef& j) const {
  if (omega_) return omega_(n, j);
  return omega_membership(n, j.p, freq_.mu, freq_.eps0, freq_.D);
}

template <class T>
const BlockPropagator<T>& ExpansionContext<T>::propagator(long n, const ClusterRef& j) const {
  const BlockKey key{n, j};
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
  }
  if (excluded_block(n, j))
    throw LabelInconsistency("propagator", "no propagator on block n=" + std::to_string(n) +
                                               " p=" + std::to_string(j.p));
  auto bp = std::make_unique<BlockPropagator<T>>(
      make_block_propagator<T>(n, catalog_->cluster(j), counterterm(n, j), freq_, cut_));
  std::lock_guard<std::mutex> lk(mu_);
  auto [it, inserted] = cache_.emplace(key, std::move(bp));
  return *it->second;
}

template <class T>
bool ExpansionContext<T>::is_q_mode(long n, const IVec& m, int D) {
  if (n != 1) return false;
  for (int i = 0; i < kMaxDim; ++i) {
    const int a = m[i] < 0 ? -m[i] : m[i];
    if (i < D ? a != 1 : a != 0) return false;
  }
  return true;
}

template <class T>
T ExpansionContext<T>::endpoint_factor(const IVec& m) const {
  int neg = 0;
  for (int i = 0; i < freq_.D; ++i)
    if (m[i] < 0) ++neg;
  return neg % 2 ? T(-q_) : q_;
}

template <class T>
TreeExpansion<T>::TreeExpansion(const ExpansionContext<T>& ctx, TreeMode mode, const CountertermTable<T>* table,
                                int k_max)
    : ctx_(ctx), mode_(mode), table_(table), k_max_(k_max) {}

namespace {

bool contains(const std::vector<ModeKey>& s, const ModeKey& x) { return std::binary_search(s.begin(), s.end(), x); }

void add_block(const ClusterCatalog& cat, long n, const IVec& mp, std::vector<ModeKey>& out) {
  const auto [ref, a] = cat.locate(mp);
  (void)a;
  for (const IVec& m : cat.cluster(ref).members) out.emplace_back(n, m);
}

void normalize(std::vector<ModeKey>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

IVec combine(const IVec& a, const IVec& b, const IVec& c) { return a + b - c; }

// Appends sub-tree s below node `parent` with sign sigma; returns the new node index.
int graft(LabelledTree& t, const LabelledTree& s, int parent, int sigma) {
  const int off = static_cast<int>(t.nodes.size());
  for (const TreeNode& nd : s.nodes) {
    TreeNode c = nd;
    c.parent = nd.parent < 0 ? parent : nd.parent + off;
    for (int& ch : c.children) ch += off;
    t.nodes.push_back(std::move(c));
  }
  t.nodes[off].line.sigma = sigma;
  t.nodes[parent].children.push_back(off);
  return off;
}

constexpr int kSigma[3] = {1, 1, -1};

}  // namespace

template <class T>
const std::vector<ModeKey>& TreeExpansion<T>::support(int k) {
  auto it = support_.find(k);
  if (it != support_.end()) return it->second;
  if (k > k_max_) throw ConfigError("trees", "order " + std::to_string(k) + " above the enumeration cap");
  std::vector<ModeKey> out;
  const int D = ctx_.D();
  const ClusterCatalog& cat = ctx_.catalog();
  if (k == 0) {
    for (int mask = 0; mask < (1 << D); ++mask) {
      IVec m{};
      for (int i = 0; i < D; ++i) m[i] = (mask >> i) & 1 ? -1 : 1;
      out.emplace_back(1, m);
    }
  } else {
    for (int k1 = 0; k1 <= k - 1; ++k1)
      for (int k2 = 0; k1 + k2 <= k - 1; ++k2) {
        const int k3 = k - 1 - k1 - k2;
        const auto s1 = support(k1);
        const auto s2 = support(k2);
        const auto s3 = support(k3);
        for (const auto& x1 : s1)
          for (const auto& x2 : s2)
            for (const auto& x3 : s3) {
              const IVec mp = combine(x1.second, x2.second, x3.second);
              const long n = x1.first + x2.first - x3.first;
              if (norm2(mp) == 0) continue;
              const auto [ref, a] = cat.locate(mp);
              (void)a;
              if (ctx_.excluded_block(n, ref)) continue;
              add_block(cat, n, mp, out);
            }
      }
    if (mode_ == TreeMode::Full && table_) {
      for (int r = 1; r < k; ++r)
        for (const auto& x : support(k - r)) {
          if (x.first == 1 && norm2(x.second) == D) continue;
          const auto [ref, a] = cat.locate(x.second);
          (void)a;
          if (!ctx_.excluded_block(x.first, ref) && table_->in_omega(x.first, ref)) add_block(cat, x.first, x.second, out);
        }
    }
  }
  normalize(out);
  return support_[k] = std::move(out);
}

template <class T>
bool TreeExpansion<T>::line_labels(long n, const IVec& m, std::vector<TreeLine>& out) const {
  out.clear();
  if (norm2(m) == 0) return false;
  const ClusterCatalog& cat = ctx_.catalog();
  const auto [ref, a] = cat.locate(m);
  if (ctx_.excluded_block(n, ref)) return false;
  const BlockPropagator<T>& P = ctx_.propagator(n, ref);
  const SphereCluster& cl = cat.cluster(ref);
  for (const auto& [i, h] : P.active_labels())
    for (int b = 0; b < cl.d(); ++b) {
      if (is_zero(P.entry(h, i, a, b))) continue;
      TreeLine l;
      l.i = i;
      l.h = h;
      l.n = n;
      l.m = m;
      l.mp = cl.members[b];
      l.j = ref;
      l.a = a;
      l.b = b;
      out.push_back(l);
    }
  return !out.empty();
}

template <class T>
void TreeExpansion<T>::build(int k, long n, const IVec& m, const Visitor& f) {
  const ClusterCatalog& cat = ctx_.catalog();
  if (k == 0) {
    if (!ExpansionContext<T>::is_q_mode(n, m, ctx_.D())) return;
    LabelledTree t;
    TreeNode v;
    v.s = 0;
    v.line.n = 1;
    v.line.m = v.line.mp = m;
    const auto [ref, a] = cat.locate(m);
    v.line.j = ref;
    v.line.a = v.line.b = a;
    v.line.unit = true;
    t.nodes.push_back(v);
    f(t);
    return;
  }
  std::vector<TreeLine> lines;
  if (!line_labels(n, m, lines)) return;
  for (const TreeLine& line : lines) {
    build_cubic(k, n, line.mp, line, false, 0, IVec{}, f);
    if (mode_ != TreeMode::Full || !table_ || line.i != 1 || !table_->in_omega(n, line.j)) continue;
    const SphereCluster& cl = cat.cluster(line.j);
    for (int r = 1; r < k; ++r) {
      const Matrix<T> L = table_->L(r, n, line.j, line.h, cl.d());
      for (int bp = 0; bp < cl.d(); ++bp) {
        if (is_zero(L(line.b, bp))) continue;
        for (const LabelledTree& sub : trees(k - r, n, cl.members[bp])) {
          if (sub.nodes[0].line.i == -1) continue;
          LabelledTree t;
          TreeNode v;
          v.s = 1;
          v.k = r;
          v.ct_h = line.h;
          v.line = line;
          t.nodes.push_back(v);
          graft(t, sub, 0, 1);
          f(t);
        }
      }
    }
  }
}

template <class T>
void TreeExpansion<T>::build_cubic(int k, long n, const IVec& mp, const TreeLine& line, bool path, long ne,
                                   const IVec& me, const Visitor& f) {
  const double tau = ctx_.freq().tau;
  const bool renorm = mode_ == TreeMode::Renormalized || path;
  for (int k1 = 0; k1 <= k - 1; ++k1)
    for (int k2 = 0; k1 + k2 <= k - 1; ++k2) {
      const int ks[3] = {k1, k2, k - 1 - k1 - k2};
      // pos = index of the child carrying e (path mode), -1 otherwise.
      for (int pos = path ? 0 : -1; pos < (path ? 3 : 0); ++pos) {
        const std::vector<ModeKey>* S[3];
        for (int c = 0; c < 3; ++c) S[c] = c == pos ? &path_support(ks[c], ne, me) : &support(ks[c]);
        const std::vector<ModeKey> s0 = *S[0], s1 = *S[1];
        for (const auto& x0 : s0)
          for (const auto& x1 : s1) {
            // sigma = (+, +, -): x2 = x0 + x1 - (n, mp)
            const ModeKey x2{x0.first + x1.first - n, x0.second + x1.second - mp};
            if (!contains(*S[2], x2)) continue;
            const ModeKey xs[3] = {x0, x1, x2};
            const std::vector<LabelledTree>* L[3];
            bool empty = false;
            for (int c = 0; c < 3; ++c) {
              L[c] = c == pos ? &path_trees(ks[c], xs[c].first, xs[c].second, ne, me)
                              : &trees(ks[c], xs[c].first, xs[c].second);
              if (L[c]->empty()) empty = true;
            }
            if (empty) continue;
            for (const LabelledTree& t0 : *L[0])
              for (const LabelledTree& t1 : *L[1])
                for (const LabelledTree& t2 : *L[2]) {
                  LabelledTree t;
                  TreeNode v;
                  v.s = 3;
                  v.k = 1;
                  v.line = line;
                  t.nodes.push_back(v);
                  graft(t, t0, 0, kSigma[0]);
                  graft(t, t1, 0, kSigma[1]);
                  graft(t, t2, 0, kSigma[2]);
                  if (renorm && line.i == 1 && !line.unit && !resonances_exiting(t, 0, tau).empty()) continue;
                  f(t);
                }
          }
      }
    }
}

template <class T>
const std::vector<LabelledTree>& TreeExpansion<T>::trees(int k, long n, const IVec& m) {
  const auto key = std::make_pair(k, ModeKey{n, m});
  auto it = memo_.find(key);
  if (it != memo_.end()) return it->second;
  std::vector<LabelledTree> out;
  build(k, n, m, [&](const LabelledTree& t) { out.push_back(t); });
  return memo_[key] = std::move(out);
}

template <class T>
void TreeExpansion<T>::for_each(int k, long n, const IVec& m, const Visitor& f) {
  if (k > k_max_) throw ConfigError("trees", "order " + std::to_string(k) + " above the enumeration cap");
  build(k, n, m, f);
}

template <class T>
T TreeExpansion<T>::sum(int k, long n, const IVec& m) {
  T s = T(0);
  for_each(k, n, m, [&](const LabelledTree& t) { s += evaluate_tree(t, ctx_, table_); });
  return s;
}

template <class T>
const std::vector<ModeKey>& TreeExpansion<T>::path_support(int k, long ne, const IVec& me) {
  const auto key = std::make_tuple(k, ne, me);
  auto it = path_support_.find(key);
  if (it != path_support_.end()) return it->second;
  std::vector<ModeKey> out;
  const ClusterCatalog& cat = ctx_.catalog();
  if (k == 0) {
    out.emplace_back(ne, me);
  } else {
    for (int k1 = 0; k1 <= k - 1; ++k1)
      for (int k2 = 0; k1 + k2 <= k - 1; ++k2) {
        const int ks[3] = {k1, k2, k - 1 - k1 - k2};
        for (int pos = 0; pos < 3; ++pos) {
          std::vector<ModeKey> S[3];
          for (int c = 0; c < 3; ++c) S[c] = c == pos ? path_support(ks[c], ne, me) : support(ks[c]);
          for (const auto& x0 : S[0])
            for (const auto& x1 : S[1])
              for (const auto& x2 : S[2]) {
                const IVec mp = x0.second + x1.second - x2.second;
                const long n = x0.first + x1.first - x2.first;
                if (norm2(mp) == 0) continue;
                const auto [ref, a] = cat.locate(mp);
                (void)a;
                if (ctx_.excluded_block(n, ref)) continue;
                add_block(cat, n, mp, out);
              }
        }
      }
  }
  normalize(out);
  return path_support_[key] = std::move(out);
}

template <class T>
void TreeExpansion<T>::build_path(int k, long n, const IVec& m, long ne, const IVec& me, const Visitor& f) {
  if (k == 0) {
    if (n != ne || !(m == me)) return;
    LabelledTree t;
    TreeNode v;
    v.s = 0;
    v.special = true;
    v.line.n = ne;
    v.line.m = v.line.mp = me;
    const auto [ref, a] = ctx_.catalog().locate(me);
    v.line.j = ref;
    v.line.a = v.line.b = a;
    v.line.unit = true;
    t.nodes.push_back(v);
    f(t);
    return;
  }
  std::vector<TreeLine> lines;
  if (!line_labels(n, m, lines)) return;
  for (const TreeLine& line : lines) build_cubic(k, n, line.mp, line, true, ne, me, f);
}

template <class T>
const std::vector<LabelledTree>& TreeExpansion<T>::path_trees(int k, long n, const IVec& m, long ne,
                                                              const IVec& me) {
  const PathKey key{k, n, m, me, ne};
  auto it = path_memo_.find(key);
  if (it != path_memo_.end()) return it->second;
  std::vector<LabelledTree> out;
  build_path(k, n, m, ne, me, [&](const LabelledTree& t) { out.push_back(t); });
  return path_memo_[key] = std::move(out);
}

template <class T>
void TreeExpansion<T>::for_each_family(int k, long n, const ClusterRef& j, const Visitor& f) {
  if (mode_ == TreeMode::Full) throw ConfigError("trees", "family trees are enumerated in renormalized mode");
  if (k < 1 || k > k_max_) throw ConfigError("trees", "family order out of range");
  const SphereCluster& cl = ctx_.catalog().cluster(j);
  const double tau = ctx_.freq().tau;
  for (int a = 0; a < cl.d(); ++a)
    for (int b = 0; b < cl.d(); ++b) {
      TreeLine root;
      root.i = 1;
      root.h = -1;
      root.n = n;
      root.m = root.mp = cl.members[a];
      root.j = j;
      root.a = root.b = a;
      root.unit = true;
      build_cubic(k, n, cl.members[a], root, true, n, cl.members[b], [&](const LabelledTree& t0) {
        LabelledTree t = t0;
        t.family = true;
        const int h1 = t.max_scale();
        if (static_cast<double>(n) < std::pow(2.0, (h1 - 2) / tau)) return;
        f(t);
      });
    }
}

template <class T>
ScaleSums<T> TreeExpansion<T>::family_sums(int k, long n, const ClusterRef& j) {
  ScaleSums<T> out;
  const int d = ctx_.catalog().cluster(j).d();
  for_each_family(k, n, j, [&](const LabelledTree& t) {
    const T v = evaluate_tree(t, ctx_, table_);
    if (is_zero(v)) return;
    const int h1 = t.max_scale();
    auto it = out.find(h1);
    if (it == out.end()) it = out.emplace(h1, Matrix<T>(d, d)).first;
    const int e = t.special_node();
    it->second(t.nodes[0].line.a, t.nodes[e].line.a) += v;
  });
  return out;
}

template <class T>
T evaluate_tree(const LabelledTree& t, const ExpansionContext<T>& ctx, const CountertermTable<T>* table) {
  T val = T(1);
  for (std::size_t v = 0; v < t.nodes.size(); ++v) {
    const TreeNode& nd = t.nodes[v];
    const TreeLine& l = nd.line;
    if (!l.unit) {
      val *= ctx.propagator(l.n, l.j).entry(l.h, l.i, l.a, l.b);
    }
    if (nd.s == 0) {
      if (!nd.special) val *= ctx.endpoint_factor(l.m);
    } else if (nd.s == 1) {
      if (!table) throw MissingCounterterm("evaluate_tree", "tree has a counterterm node but no table");
      const int d = ctx.catalog().cluster(l.j).d();
      const TreeLine& lc = t.nodes[nd.children[0]].line;
      val *= table->L(nd.k, l.n, l.j, nd.ct_h, d)(l.b, lc.a);
    }
    if (is_zero(val)) return val;
  }
  return val;
}

template <class T>
double extension_factor(const LabelledTree& t, const ExpansionContext<T>& ctx) {
  const CutoffSpec& cut = ctx.cut();
  const FrequencyContext& f = ctx.freq();
  auto chi_m1 = [&](double x) { return 1.0 - cut.chi(x); };
  const int N = static_cast<int>(t.nodes.size());
  auto regular = [&](int v) { return !t.excluded(v) && !t.nodes[v].line.unit; };
  double r = 1.0;
  for (int v = 0; v < N; ++v) {
    const TreeLine& l = t.nodes[v].line;
    if (!regular(v) || l.i != 1) continue;
    const double x = ctx.propagator(l.n, l.j).state.x;
    r *= chi_m1(std::fabs(x) * std::pow(std::fabs(static_cast<double>(l.n)), f.tau));
  }
  const bool fam = t.family;
  for (int u = 0; u < N; ++u) {
    const TreeLine& l1 = t.nodes[u].line;
    if (!regular(u) || (l1.i != 0 && l1.i != 1)) continue;
    int sign = 1;
    for (int w = u; t.nodes[w].parent >= 0;) {
      sign *= t.nodes[w].line.sigma;
      w = t.nodes[w].parent;
      const TreeLine& l2 = t.nodes[w].line;
      if (!regular(w) || (l2.i != 0 && l2.i != 1) || l1.n == l2.n || sign != 1) continue;
      if (fam && t.on_path_to_special(u) != t.on_path_to_special(w)) continue;
      const double d1 = ctx.propagator(l1.n, l1.j).state.delta;
      const double d2 = ctx.propagator(l2.n, l2.j).state.delta;
      const double dn = std::fabs(static_cast<double>(l1.n - l2.n));
      r *= chi_m1(std::fabs(d1 - d2) * std::pow(dn, f.tau1));
    }
  }
  return r;
}

template class ExpansionContext<double>;
template class ExpansionContext<Rational>;
template class TreeExpansion<double>;
template class TreeExpansion<Rational>;
template double evaluate_tree<double>(const LabelledTree&, const ExpansionContext<double>&,
                                      const CountertermTable<double>*);
template Rational evaluate_tree<Rational>(const LabelledTree&, const ExpansionContext<Rational>&,
                                          const CountertermTable<Rational>*);
template double extension_factor<double>(const LabelledTree&, const ExpansionContext<double>&);
template double extension_factor<Rational>(const LabelledTree&, const ExpansionContext<Rational>&);

}  // namespace lindstedt
