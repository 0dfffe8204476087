#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "lindstedt/numeric.hpp"

namespace lindstedt {

// All m in Z^D (or the strictly positive sector) with |m|^2 = p, in lexicographic order.
std::vector<IVec> enumerate_sphere(long p, int D, bool positive_sector = false);

// Constants of the sphere partition: |cluster| <= C1 p^alpha, separation >= C2 p^beta.
struct ClusterConstants {
  double alpha = 0.2;
  double beta = 1.0 / 3.0;
  double C1 = 2.0;
  double C2 = 0.35;
  // D = 2 additionally demands at most two points per cluster.
  int max_size = 2;

  // Calibrated defaults. For D = 2 the edge constant 0.35 keeps every cluster
  // at <= 2 points on all spheres up to p = 1e4 (the worst sphere p = 4505
  // breaks at 0.353). For D >= 3 beta follows the general exponent formula.
  static ClusterConstants defaults(int D, double alpha = 0.2);
};

double sphere_beta(int D, double alpha);

struct SphereCluster {
  int j = 0;  // position among the clusters of its sphere, 0-based
  long p = 0;
  std::vector<IVec> members;  // lexicographic
  double diam = 0.0;
  double min_separation = -1.0;  // to the nearest other cluster of the sphere, -1 if alone

  int d() const { return static_cast<int>(members.size()); }
  int index_of(const IVec& m) const;  // -1 when absent
};

struct ClusterCheck {
  bool ok = true;
  std::string failure;
};

// Union-find over the proximity graph with edges |m - m'| < C2 p^beta. Throws
// InvariantViolation when a produced cluster breaks one of the bounds.
std::vector<SphereCluster> cluster_sphere(const std::vector<IVec>& points,
                                          const ClusterConstants& cc, int D);

// Non-throwing verification of the four partition properties.
ClusterCheck check_sphere_clusters(const std::vector<SphereCluster>& cl,
                                   const ClusterConstants& cc, int D);

// Lazily computed sphere partitions of the whole lattice, shared between the
// tree expansion and the recursion so that both index blocks identically.
struct ClusterRef {
  long p = 0;
  int j = 0;
  friend bool operator==(const ClusterRef&, const ClusterRef&) = default;
  friend auto operator<=>(const ClusterRef&, const ClusterRef&) = default;
};

class ClusterCatalog {
 public:
  ClusterCatalog(int D, ClusterConstants cc) : D_(D), cc_(cc) {}

  int D() const { return D_; }
  const ClusterConstants& constants() const { return cc_; }

  const std::vector<SphereCluster>& sphere(long p) const;
  const SphereCluster& cluster(const ClusterRef& r) const { return sphere(r.p).at(r.j); }
  // Cluster and member position of m.
  std::pair<ClusterRef, int> locate(const IVec& m) const;

 private:
  int D_;
  ClusterConstants cc_;
  mutable std::mutex mu_;
  mutable std::map<long, std::unique_ptr<std::vector<SphereCluster>>> spheres_;
};

// Membership of (n, p) in the index set carrying counterterms.
bool omega_membership(long n, long p, double mu, double eps0, int D);

// Partition of a finite mode set by proximity of (m, |m|^2).
struct BourgainConstants {
  double alpha = 0.2;
  double beta = 0.004;
  double C1 = 9.0;
  double C2 = 1.5;
  static BourgainConstants defaults(int D, double alpha = 0.2);
};

double bourgain_beta(int D, double alpha);

struct BourgainCell {
  int j = 0;
  long p = 0;  // min |m|^2 over members, raised to 1 for the origin cell
  std::vector<IVec> members;
  double diam = 0.0;
};

std::vector<BourgainCell> bourgain_partition(const std::vector<IVec>& modes,
                                             const BourgainConstants& bc, int D);
ClusterCheck check_bourgain_cells(const std::vector<BourgainCell>& cells,
                                  const BourgainConstants& bc, int D);

// All m in Z^D with |m| <= radius.
std::vector<IVec> ball_points(int D, double radius);

struct ResonantCell {
  int j = 0;
  std::vector<Mode> members;
  int d() const { return static_cast<int>(members.size()); }
};

std::vector<ResonantCell> build_resonant_cells(const std::vector<BourgainCell>& cells,
                                               double eps0, int D);

}  // namespace lindstedt
