#include "lindstedt/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lindstedt {

int LabelledTree::order() const {
  int k = 0;
  for (const TreeNode& v : nodes) k += v.k;
  return k;
}

int LabelledTree::endpoint_count() const {
  int c = 0;
  for (const TreeNode& v : nodes)
    if (v.s == 0 && !v.special) ++c;
  return c;
}

int LabelledTree::special_node() const {
  for (std::size_t v = 0; v < nodes.size(); ++v)
    if (nodes[v].special) return static_cast<int>(v);
  return -1;
}

int LabelledTree::max_scale() const {
  int h = -1;
  for (std::size_t v = 0; v < nodes.size(); ++v)
    if (!excluded(static_cast<int>(v))) h = std::max(h, nodes[v].line.h);
  return h;
}

std::vector<int> LabelledTree::path(int from, int to) const {
  std::vector<int> out;
  for (int u = from; u >= 0; u = nodes[u].parent) {
    out.push_back(u);
    if (u == to) return out;
  }
  return {};
}

bool LabelledTree::on_path_to_special(int v) const {
  const int e = special_node();
  for (int u = e; u >= 0; u = nodes[u].parent)
    if (u == v) return true;
  return false;
}

std::string LabelledTree::to_json(int D) const {
  std::ostringstream os;
  auto vec = [&](const IVec& m) {
    os << '[';
    for (int i = 0; i < D; ++i) os << (i ? "," : "") << m[i];
    os << ']';
  };
  os << "{\"family\":" << (family ? "true" : "false") << ",\"nodes\":[";
  for (std::size_t v = 0; v < nodes.size(); ++v) {
    const TreeNode& nd = nodes[v];
    const TreeLine& l = nd.line;
    if (v) os << ',';
    os << "{\"s\":" << nd.s << ",\"k\":" << nd.k << ",\"parent\":" << nd.parent << ",\"children\":[";
    for (std::size_t c = 0; c < nd.children.size(); ++c) os << (c ? "," : "") << nd.children[c];
    os << "],\"special\":" << (nd.special ? "true" : "false");
    if (nd.s == 1) os << ",\"ct_h\":" << nd.ct_h;
    os << ",\"line\":{\"i\":" << l.i << ",\"h\":" << l.h << ",\"n\":" << l.n << ",\"m\":";
    vec(l.m);
    os << ",\"mp\":";
    vec(l.mp);
    os << ",\"p\":" << l.j.p << ",\"j\":" << l.j.j << ",\"a\":" << l.a << ",\"b\":" << l.b << ",\"sigma\":" << l.sigma
       << ",\"unit\":" << (l.unit ? "true" : "false") << "}}";
  }
  os << "]}";
  return os.str();
}

namespace {

bool is_forced(const std::vector<int>& forced, int v) {
  return std::find(forced.begin(), forced.end(), v) != forced.end();
}

// Line of v may lie inside a cluster of scale <= h.
bool inside(const LabelledTree& t, int v, int h, const std::vector<int>& forced) {
  return !t.excluded(v) && !is_forced(forced, v) && t.nodes[v].line.h <= h;
}

// Connected set of nodes reached from v downward through lines of scale <= h.
ClusterInfo component_below(const LabelledTree& t, int v, int h, const std::vector<int>& forced) {
  ClusterInfo c;
  c.exit = v;
  c.scale = -2;
  std::vector<int> stack{v};
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    c.nodes.push_back(u);
    for (int ch : t.nodes[u].children) {
      if (inside(t, ch, h, forced)) {
        c.lines.push_back(ch);
        c.scale = std::max(c.scale, t.nodes[ch].line.h);
        stack.push_back(ch);
      } else {
        c.entering.push_back(ch);
      }
    }
  }
  std::sort(c.nodes.begin(), c.nodes.end());
  std::sort(c.lines.begin(), c.lines.end());
  std::sort(c.entering.begin(), c.entering.end());
  return c;
}

bool resonance_conditions(const LabelledTree& t, const ClusterInfo& c, int exit, int entering, double tau) {
  if (c.nodes.size() < 2) return false;
  const TreeLine& l1 = t.nodes[exit].line;
  const TreeLine& lT = t.nodes[entering].line;
  if (l1.n != lT.n) return false;
  if (static_cast<double>(lT.n) < std::pow(2.0, (c.scale - 2) / tau)) return false;
  if (!(l1.j == lT.j)) return false;
  // Off-path lines with the same n must sit on another block.
  std::vector<int> on_path;
  for (int u = t.nodes[entering].parent; u >= 0 && u != exit; u = t.nodes[u].parent) on_path.push_back(u);
  for (int u : c.lines) {
    if (std::find(on_path.begin(), on_path.end(), u) != on_path.end()) continue;
    const TreeLine& l = t.nodes[u].line;
    if (l.n == lT.n && l.j == lT.j) return false;
  }
  return true;
}

int cluster_order(const LabelledTree& t, const ClusterInfo& c) {
  int k = 0;
  for (int u : c.nodes) k += t.nodes[u].k;
  return k;
}

}  // namespace

std::vector<ClusterInfo> find_clusters(const LabelledTree& t, const std::vector<int>& forced) {
  const int N = static_cast<int>(t.nodes.size());
  std::vector<int> scales;
  for (int v = 1; v < N; ++v)
    if (!t.excluded(v) && !is_forced(forced, v)) scales.push_back(t.nodes[v].line.h);
  std::sort(scales.begin(), scales.end());
  scales.erase(std::unique(scales.begin(), scales.end()), scales.end());
  std::vector<ClusterInfo> out;
  for (int h : scales) {
    std::vector<int> parent(N);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (int v = 1; v < N; ++v)
      if (inside(t, v, h, forced)) parent[find(v)] = find(t.nodes[v].parent);
    std::map<int, ClusterInfo> comps;
    for (int v = 1; v < N; ++v) {
      if (!inside(t, v, h, forced)) continue;
      ClusterInfo& c = comps[find(v)];
      c.lines.push_back(v);
      c.scale = std::max(c.scale, t.nodes[v].line.h);
    }
    for (auto& [root, c] : comps) {
      if (c.scale != h) continue;
      for (int v = 0; v < N; ++v)
        if (find(v) == root) c.nodes.push_back(v);
      for (int v = 1; v < N; ++v) {
        const int par = t.nodes[v].parent;
        const bool in_v = std::binary_search(c.nodes.begin(), c.nodes.end(), v);
        const bool in_p = std::binary_search(c.nodes.begin(), c.nodes.end(), par);
        if (!in_v && in_p) c.entering.push_back(v);
      }
      c.exit = c.nodes.front();
      for (int v : c.nodes) {
        const int par = t.nodes[v].parent;
        if (par < 0 || !std::binary_search(c.nodes.begin(), c.nodes.end(), par)) c.exit = v;
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<ResonanceRecord> resonances_exiting(const LabelledTree& t, int v, double tau) {
  std::vector<ResonanceRecord> out;
  if (t.excluded(v)) return out;
  const int he = t.nodes[v].line.h;
  for (int h = -1; h <= he - 2; ++h) {
    const ClusterInfo c = component_below(t, v, h, {});
    if (c.lines.empty() || c.scale != h) continue;
    if (c.entering.size() == 1 && resonance_conditions(t, c, v, c.entering[0], tau)) {
      out.push_back(ResonanceRecord{1, c, c.entering[0], v, cluster_order(t, c)});
    }
    // A type-0 line inside the cluster may play the entering line of a 2-resonance.
    for (int w : c.lines) {
      if (t.nodes[w].line.i != 0) continue;
      const ClusterInfo c2 = component_below(t, v, h, {w});
      if (c2.lines.empty() || c2.scale != h) continue;
      if (c2.entering.size() == 1 && c2.entering[0] == w && resonance_conditions(t, c2, v, w, tau))
        out.push_back(ResonanceRecord{2, c2, w, v, cluster_order(t, c2)});
    }
  }
  return out;
}

std::vector<ResonanceRecord> find_resonances(const LabelledTree& t, double tau) {
  std::vector<ResonanceRecord> out;
  for (int v = 0; v < static_cast<int>(t.nodes.size()); ++v) {
    auto r = resonances_exiting(t, v, tau);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

BryunoReport bryuno_report(const LabelledTree& t, double c, double beta, double tau) {
  BryunoReport r;
  std::vector<int> hs;
  for (int v = 0; v < static_cast<int>(t.nodes.size()); ++v) {
    const TreeLine& l = t.nodes[v].line;
    if (t.excluded(v) || l.unit || l.i != 1) continue;
    hs.push_back(l.h);
  }
  if (hs.empty()) return r;
  const int k = std::max(1, t.order());
  const int hmax = *std::max_element(hs.begin(), hs.end());
  for (int h = -1; h <= hmax; ++h) {
    const int N = static_cast<int>(std::count_if(hs.begin(), hs.end(), [h](int x) { return x >= h; }));
    const double w = k * std::pow(2.0, (2.0 - h) * beta / tau);
    const double bound = std::max(0.0, c * w - 1.0);
    r.entries.push_back({h, N, bound});
    if (N > bound) r.ok = false;
    if (N > 0) r.c_needed = std::max(r.c_needed, (N + 1.0) / w);
  }
  return r;
}

BryunoReport bryuno_assert(const LabelledTree& t, double c, double beta, double tau) {
  BryunoReport r = bryuno_report(t, c, beta, tau);
  if (!r.ok) {
    for (const BryunoEntry& e : r.entries)
      if (e.count > e.bound)
        throw BoundViolation("bryuno", "N_" + std::to_string(e.h) + " = " + std::to_string(e.count) +
                                           " exceeds " + std::to_string(e.bound));
  }
  return r;
}

bool check_conservation(const LabelledTree& t) {
  for (const TreeNode& nd : t.nodes) {
    const TreeLine& l = nd.line;
    if (l.i == -1 && !(l.m == l.mp)) return false;
    if (norm2(l.m) != l.j.p || norm2(l.mp) != l.j.p) return false;
    if (nd.s == 3) {
      if (nd.children.size() != 3) return false;
      long n = 0;
      IVec m{};
      int sig = 0;
      for (int c : nd.children) {
        const TreeLine& lc = t.nodes[c].line;
        if (lc.sigma != 1 && lc.sigma != -1) return false;
        sig += lc.sigma;
        n += lc.sigma * lc.n;
        for (int i = 0; i < kMaxDim; ++i) m[i] += lc.sigma * lc.m[i];
      }
      if (sig != 1 || n != l.n || !(m == l.mp)) return false;
    } else if (nd.s == 1) {
      if (nd.children.size() != 1) return false;
      const TreeLine& lc = t.nodes[nd.children[0]].line;
      if (lc.n != l.n || !(lc.j == l.j) || lc.sigma != 1) return false;
    } else if (!nd.special) {
      if (l.n != 1) return false;
      for (int i = 0; i < kMaxDim; ++i)
        if (l.m[i] != 0 && l.m[i] != 1 && l.m[i] != -1) return false;
    }
  }
  return true;
}

}  // namespace lindstedt
