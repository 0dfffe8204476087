#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "lindstedt/blocks.hpp"
#include "lindstedt/errors.hpp"
#include "lindstedt/lattice.hpp"
#include "lindstedt/matrix.hpp"
#include "lindstedt/smalldiv.hpp"

namespace lindstedt {

// Counterterm M_{n,j} on a block; an empty matrix stands for zero.
template <class T>
using BlockField = std::function<Matrix<T>(long n, const ClusterRef& j)>;

using BlockPredicate = std::function<bool(long n, const ClusterRef& j)>;

using BlockKey = std::pair<long, ClusterRef>;
using ModeKey = std::pair<long, IVec>;

// Shared state of an expansion: frequencies, cutoffs, the cluster catalog,
// the amplitude q and the counterterms M. Propagators are built lazily and
// cached; the cache is guarded so enumerations may run from several threads.
template <class T>
class ExpansionContext {
 public:
  ExpansionContext(const FrequencyContext& f, const CutoffSpec& cut, std::shared_ptr<const ClusterCatalog> cat,
                   T q);

  const FrequencyContext& freq() const { return freq_; }
  const CutoffSpec& cut() const { return cut_; }
  const ClusterCatalog& catalog() const { return *catalog_; }
  std::shared_ptr<const ClusterCatalog> catalog_ptr() const { return catalog_; }
  int D() const { return freq_.D; }
  const T& q() const { return q_; }
  void set_q(const T& q) { q_ = q; }

  void set_counterterms(BlockField<T> M);
  Matrix<T> counterterm(long n, const ClusterRef& j) const;
  // Membership in the index set carrying counterterms; defaults to the
  // window test on (n, p).
  void set_omega(BlockPredicate omega) { omega_ = std::move(omega); }
  bool in_omega(long n, const ClusterRef& j) const;

  const BlockPropagator<T>& propagator(long n, const ClusterRef& j) const;

  // The block of the kernel modes (n = 1, |m|^2 = D) and the zero mode carry no line.
  bool excluded_block(long n, const ClusterRef& j) const { return j.p == 0 || (n == 1 && j.p == freq_.D); }
  static bool is_q_mode(long n, const IVec& m, int D);
  // (-1)^{number of negative components} q
  T endpoint_factor(const IVec& m) const;

 private:
  FrequencyContext freq_;
  CutoffSpec cut_;
  std::shared_ptr<const ClusterCatalog> catalog_;
  T q_;
  BlockField<T> M_;
  BlockPredicate omega_;
  mutable std::mutex mu_;
  mutable std::map<BlockKey, std::unique_ptr<BlockPropagator<T>>> cache_;
};

struct TreeLine {
  int i = -1;
  int h = -1;
  long n = 0;
  IVec m{};   // toward the root, Lambda_j(a)
  IVec mp{};  // at the node it exits, Lambda_j(b)
  ClusterRef j{};
  int a = 0;
  int b = 0;
  int sigma = 0;      // +1 / -1, and 0 on the root line
  bool unit = false;  // propagator 1: end-point lines and both special lines of a family tree
};

struct TreeNode {
  int s = 0;  // 0 end-point, 1 counterterm insertion, 3 cubic vertex
  int k = 0;
  int ct_h = -1;  // s = 1: scale of the counterterm
  int parent = -1;
  std::vector<int> children;  // ordered, signs (+, +, -) on cubic vertices
  TreeLine line;              // the line leaving this node
  bool special = false;       // the entering end-point e of a family tree
};

// Planar rooted tree; node 0 sits under the root line.
struct LabelledTree {
  std::vector<TreeNode> nodes;
  bool family = false;  // resonance-family tree: root line and e carry no propagator

  int order() const;
  int endpoint_count() const;  // ordinary end-points only
  int special_node() const;    // index of e, -1 when absent
  // Largest scale among the lines that carry a propagator, -1 if none.
  int max_scale() const;
  // The line of node v is excluded from clusters (family root line, line of e).
  bool excluded(int v) const { return (family && v == 0) || nodes[v].special; }
  // Lines on the path from the line of `from` up to the line of `to` (both included).
  std::vector<int> path(int from, int to) const;
  bool on_path_to_special(int v) const;

  // Canonical JSON: nodes in depth-first order with all labels.
  std::string to_json(int D) const;
};

enum class TreeMode { Full, Renormalized };

struct ClusterInfo {
  int scale = -1;
  std::vector<int> nodes;
  std::vector<int> lines;     // nodes whose line lies inside the cluster
  std::vector<int> entering;  // nodes whose line enters the cluster
  int exit = -1;              // top node; its line leaves the cluster
};

struct ResonanceRecord {
  int kind = 1;  // 1- or 2-resonance
  ClusterInfo cluster;
  int entering = -1;  // node whose line is the entering line
  int exit = -1;      // node whose line is the root line of the resonance
  int order = 0;
};

// Maximal connected sets of lines with scale <= h containing a line of scale h.
std::vector<ClusterInfo> find_clusters(const LabelledTree& t, const std::vector<int>& forced_external = {});
// 1- and 2-resonances of the tree.
std::vector<ResonanceRecord> find_resonances(const LabelledTree& t, double tau);
// Resonances whose root line is the line of node v.
std::vector<ResonanceRecord> resonances_exiting(const LabelledTree& t, int v, double tau);

struct BryunoEntry {
  int h;
  int count;
  double bound;
};
struct BryunoReport {
  bool ok = true;
  std::vector<BryunoEntry> entries;
  // Smallest c for which the tree passes.
  double c_needed = 0.0;
};

// N_h = number of lines with i = 1 and scale >= h; checks N_h <= max{0, c k 2^{(2-h) beta / tau} - 1}.
BryunoReport bryuno_report(const LabelledTree& t, double c, double beta, double tau);
// Throws BoundViolation on failure.
BryunoReport bryuno_assert(const LabelledTree& t, double c, double beta, double tau);

// Sums of family-tree values split by the largest internal scale h1:
// V_{h1}(a, b) = sum of Val over family trees with root momentum Lambda_j(a)
// and entering momentum Lambda_j(b).
template <class T>
using ScaleSums = std::map<int, Matrix<T>>;

struct CountertermKey {
  int k;
  long n;
  ClusterRef j;
  friend auto operator<=>(const CountertermKey&, const CountertermKey&) = default;
  friend bool operator==(const CountertermKey&, const CountertermKey&) = default;
};

// Counterterms L^{(k)}_{n,j,h} = -sum_{h1 < h-1} V_{h1}, built on demand.
template <class T>
class CountertermTable {
 public:
  using Builder = std::function<ScaleSums<T>(int k, long n, const ClusterRef& j)>;

  CountertermTable(Builder b, BlockPredicate omega, int D);

  // Throws MissingCounterterm when absent and no builder is set.
  const ScaleSums<T>& sums(int k, long n, const ClusterRef& j) const;
  Matrix<T> L(int k, long n, const ClusterRef& j, int h, int d) const;
  // -chibar1(y) sum_{h1} C_{h1}(x) V_{h1}
  Matrix<T> assembled(int k, long n, const ClusterRef& j, double x, double y, const CutoffSpec& cut, int d) const;
  void insert(const CountertermKey& key, ScaleSums<T> s);
  std::vector<CountertermKey> keys() const;
  bool in_omega(long n, const ClusterRef& j) const { return omega_(n, j); }
  // Adds delta to entry (0, 1) of every stored matrix of the key (fault injection).
  void inject_asymmetry(const CountertermKey& key, const T& delta);

 private:
  Builder builder_;
  BlockPredicate omega_;
  int D_;
  mutable std::mutex mu_;
  mutable std::map<CountertermKey, ScaleSums<T>> table_;
};

template <class T>
class TreeExpansion {
 public:
  using Visitor = std::function<void(const LabelledTree&)>;

  TreeExpansion(const ExpansionContext<T>& ctx, TreeMode mode, const CountertermTable<T>* table = nullptr,
                int k_max = 5);

  const ExpansionContext<T>& context() const { return ctx_; }

  // Root momenta (n, m) that may carry trees of order k (a superset of the true support).
  const std::vector<ModeKey>& support(int k);
  void for_each(int k, long n, const IVec& m, const Visitor& f);
  // Memoized list used for the subtrees of higher orders.
  const std::vector<LabelledTree>& trees(int k, long n, const IVec& m);
  T sum(int k, long n, const IVec& m);
  // Family trees of order k for block (n, j), all entry pairs and all scales.
  void for_each_family(int k, long n, const ClusterRef& j, const Visitor& f);
  ScaleSums<T> family_sums(int k, long n, const ClusterRef& j);

 private:
  struct PathKey {
    int k;
    long n;
    IVec m;
    IVec me;
    long ne;
    friend auto operator<=>(const PathKey&, const PathKey&) = default;
  };

  void build(int k, long n, const IVec& m, const Visitor& f);
  void build_cubic(int k, long n, const IVec& mp, const TreeLine& line, bool path, long ne, const IVec& me,
                   const Visitor& f);
  const std::vector<LabelledTree>& path_trees(int k, long n, const IVec& m, long ne, const IVec& me);
  const std::vector<ModeKey>& path_support(int k, long ne, const IVec& me);
  void build_path(int k, long n, const IVec& m, long ne, const IVec& me, const Visitor& f);
  bool line_labels(long n, const IVec& m, std::vector<TreeLine>& out) const;

  const ExpansionContext<T>& ctx_;
  TreeMode mode_;
  const CountertermTable<T>* table_;
  int k_max_;
  std::map<int, std::vector<ModeKey>> support_;
  std::map<std::pair<int, ModeKey>, std::vector<LabelledTree>> memo_;
  std::map<PathKey, std::vector<LabelledTree>> path_memo_;
  std::map<std::tuple<int, long, IVec>, std::vector<ModeKey>> path_support_;
};

// Val(theta): product of propagators and node factors. The three placements
// of the minus sign at a cubic vertex are folded into one ordered child
// pattern (+, +, -), so the node factor 1/3 times the multiplicity 3 is 1.
template <class T>
T evaluate_tree(const LabelledTree& t, const ExpansionContext<T>& ctx, const CountertermTable<T>* table = nullptr);

// Product of chi_{-1} factors restricting a tree to the Diophantine domain
// (single-line factors on i = 1 lines, pair factors on comparable lines).
template <class T>
double extension_factor(const LabelledTree& t, const ExpansionContext<T>& ctx);

// Replays the conservation laws from the leaves; false on any mismatch.
bool check_conservation(const LabelledTree& t);

}  // namespace lindstedt
