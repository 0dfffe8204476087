#pragma once

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "lindstedt/trees.hpp"

namespace lindstedt {

template <class T>
using Coefficients = std::map<ModeKey, T>;

// (a * b * conj c)_{n,m}: sum over n1 + n2 - n3 = n, m1 + m2 - m3 = m.
template <class T>
void add_cubic(const Coefficients<T>& a, const Coefficients<T>& b, const Coefficients<T>& c, const T& w,
               Coefficients<T>& out);

template <class T>
struct SeriesSolution {
  int K = 0;
  T q{};
  std::vector<Coefficients<T>> orders;  // orders[0] holds the kernel modes

  // sum_k eta^k u^{(k)}
  Coefficients<T> truncated(const T& eta) const;
  // Largest |n| and |m|_inf over the support of order k.
  std::pair<long, int> support_radius(int k) const;
};

// Order-by-order solution of the renormalized equations, independent of the
// tree enumeration: U_{h,i} = G_{h,i} F^{(k)} plus, on i = 1, the counterterm
// terms G_{h,1} sum_r L^{(r)}_h sum_{i' in {0,1}} U^{(k-r)}_{i'}.
template <class T>
class RecursionOracle {
 public:
  RecursionOracle(const ExpansionContext<T>& ctx, const CountertermTable<T>* table = nullptr);

  const Coefficients<T>& order(int k);
  // F^{(k)} = sum over k1 + k2 + k3 = k - 1 of u^{(k1)} u^{(k2)} conj u^{(k3)}.
  const Coefficients<T>& source(int k);
  SeriesSolution<T> solve(int K);

 private:
  void compute(int k);

  const ExpansionContext<T>& ctx_;
  const CountertermTable<T>* table_;
  std::vector<Coefficients<T>> u_;
  std::vector<Coefficients<T>> w_;  // parts carried by i in {0, 1}
  std::map<int, Coefficients<T>> f_;
};

// The kernel mode V = (1, ..., 1) and u_{n,m} values of the leading solution.
IVec kernel_vertex(int D);
template <class T>
Coefficients<T> leading_coefficients(int D, const T& q);

struct QSolution {
  double q = 0.0;
  std::optional<Rational> q_squared;  // exact at eta = 0 for integer s
  int iterations = 0;
  double residual = 0.0;
};

struct QSolveOptions {
  int max_iter = 60;
  double tol = 1e-12;
  double damping = 1.0;
};

// Solves D^s q = f_{1,V}(u) where u is the order-K truncation built at amplitude q.
// Counterterms are held fixed during the iteration. Throws NoConvergence.
QSolution solve_q(double eta, int K, const FrequencyContext& f, const CutoffSpec& cut,
                  std::shared_ptr<const ClusterCatalog> cat, const BlockField<double>& M = {},
                  const QSolveOptions& opt = {});

// q0^2 = D^s / c0 with c0 the signed count of kernel triples, exact for integer s.
Rational leading_q_squared(int D, double s);

struct ResidualSample {
  double eta = 0.0;
  double q = 0.0;
  double max_residual = 0.0;
  double max_kernel_residual = 0.0;
  long modes = 0;
};

struct ResidualReport {
  int K = 0;
  std::vector<ResidualSample> samples;
  double slope = 0.0;
};

// Per-mode r_{n,m} = |m|^{2s}(-omega n + |m|^2 + mu) u_{n,m} - eps f_{n,m}(u) at eps = eta.
ResidualSample residual_at(double eta, int K, const FrequencyContext& f, const CutoffSpec& cut,
                           std::shared_ptr<const ClusterCatalog> cat);
ResidualReport residual_scan(const std::vector<double>& etas, int K, const FrequencyContext& f, const CutoffSpec& cut,
                             std::shared_ptr<const ClusterCatalog> cat);
// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);
std::vector<double> log_grid(double lo, double hi, int n);

// Re (2i)^{-D} sum u_{n,m} e^{i(n t + m.x)}; at eta = 0 this is q0 e^{it} prod sin x_i.
double reconstruct(const Coefficients<double>& u, const std::vector<double>& x, double t, int D);

struct FixpointReport {
  std::map<BlockKey, Matrix<double>> M;
  int iterations = 0;
  std::vector<double> steps;   // sup-distance between successive iterates
  std::vector<double> ratios;  // steps[i + 1] / steps[i]
  double residual = 0.0;
  double norm = 0.0;
  double bound = 0.0;
};

struct FixpointOptions {
  int max_iter = 50;
  double tol = 1e-13;
  double K2 = 10.0;  // |M|_inf <= K2 eps
  double q = 0.0;    // 0 selects q0
  long n_max = 0;    // also iterate every counterterm block with n <= n_max
};

// M <- sum_k eta^k L^{(k)}_{n,j} (each assembled with its chibar_1(y) C_h(x) weights)
// over the counterterm blocks reached by the expansion to order K and those with
// n <= opt.n_max, with eta = eps.
// Throws MelnikovFailure, NoConvergence, BoundViolation.
FixpointReport compatibility_fixpoint(double eps, int K, const FrequencyContext& f, const CutoffSpec& cut,
                                      std::shared_ptr<const ClusterCatalog> cat, const FixpointOptions& opt = {});

}  // namespace lindstedt
