#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "lindstedt/errors.hpp"
#include "lindstedt/lattice.hpp"
#include "lindstedt/matrix.hpp"
#include "lindstedt/smalldiv.hpp"

namespace lindstedt {

struct Norms {
  double inf = 0.0;
  double sigma = 0.0;
  double rms = 0.0;
};

// Exponent of the weighted norm: 1/rho = 1 + D (1 + D (D+2)! / 2).
double default_rho(int D);

// |A|_inf, the weighted sup norm max |A_ij| e^{sigma |m_i - m_j|^rho}, and
// the normalised Frobenius norm sqrt(sum A_ij^2 / d). Throws AsymmetricInput.
template <class T>
Norms matrix_norms(const Matrix<T>& A, const std::vector<IVec>& members, double sigma, double rho);

// sqrt(sum A_ij^2 / d) evaluated in double.
template <class T>
double rms_norm(const Matrix<T>& A) {
  double s = 0.0;
  for (const T& x : A.data()) {
    const double v = to_double(x);
    s += v * v;
  }
  return std::sqrt(s / static_cast<double>(A.rows()));
}

struct DerivativeCheck {
  double inverse_rel_error = 0.0;  // max |fd - formula| / max |formula| over all (i, j, h, l)
  double norm_rel_error = 0.0;
};

// Central differences in one entry A(i, j) at a time against
// d A^{-1}(h, l) / d A(i, j) = -A^{-1}(h, i) A^{-1}(j, l) and d ||A|| / d A(i, j) = A(i, j) / (d ||A||).
// Throws SingularShiftedMatrix when A is not invertible.
DerivativeCheck check_derivative_identities(const Matrix<double>& A, double step = 1e-7);

template <class T>
double inf_norm(const Matrix<T>& A) {
  double s = 0.0;
  for (const T& x : A.data()) s = std::max(s, std::fabs(to_double(x)));
  return s;
}

struct DivisorState {
  double delta = 0.0;
  double y = 0.0;   // p^{s2} delta
  double x = 0.0;   // 1 / || (delta I + p^{-s} chibar1(y) M)^{-1} ||
  double nu = 0.0;  // x = |delta + p^{-s+2 alpha} nu|, sign of delta kept
  double chibar1 = 0.0;
  double nu_ratio = 0.0;  // |nu| / |M|_inf, zero when M = 0
};

// Cached inverse of the shifted block and the cutoff values it is built from.
template <class T>
struct BlockPropagator {
  long n = 0;
  ClusterRef j;
  long p = 0;
  int d = 0;
  DivisorState state;
  T delta;
  T p_minus_s;
  Matrix<T> shifted;  // delta I + p^{-s} chibar1(y) M
  Matrix<T> inverse;
  CutoffSpec cut;

  // G_{n,j,h,i}; zero outside the cutoff windows.
  Matrix<T> G(int h, int i) const;
  // Sum over i and h, equal to p^{-s} times the inverse.
  Matrix<T> full() const { return p_minus_s * inverse; }
  // Labels (i, h) with nonzero propagator.
  std::vector<std::pair<int, int>> active_labels() const;
  // Scalar entry G_{n,j,h,i}(a, b) without building the matrix.
  T entry(int h, int i, int a, int b) const;
};

// Analytic bound |nu| <= (3 sqrt(d) + 2) d |M|_inf from the eigenvalue bracket.
double nu_bound_constant(int d);

// Builds the divisor state and cached inverse for block (n, j) with counterterm M.
// Throws SingularShiftedMatrix; checks |nu| <= C |M|_inf with C = nu_constant,
// or the analytic constant when nu_constant <= 0.
template <class T>
BlockPropagator<T> make_block_propagator(long n, const SphereCluster& cl, const Matrix<T>& M,
                                         const FrequencyContext& ctx, const CutoffSpec& cut,
                                         double nu_constant = 0.0);

template <class T>
DivisorState divisor_state(long n, const SphereCluster& cl, const Matrix<T>& M, const FrequencyContext& ctx,
                           const CutoffSpec& cut) {
  return make_block_propagator<T>(n, cl, M, ctx, cut).state;
}

// Bound (16 / gamma) C1^{1/2} p^{-3s/4} on the large-divisor propagators.
double large_divisor_bound(const FrequencyContext& ctx, const ClusterConstants& cc, long p);

// Block decomposition for the zero-mu problem. b(a) in {1, 0, -1}; the
// permutation orders indices as b = 1, then 0, then -1.
template <class T>
struct ResonantDecomposition {
  std::vector<int> b;
  std::vector<std::size_t> order;  // order[k] = original index placed at k
  std::size_t n1 = 0, n2 = 0, n3 = 0;
  Matrix<T> B;        // A12 A22^{-1}
  Matrix<T> A11t;     // A11 - A12 A22^{-1} A12^T
  Matrix<T> A22, A33;
  Matrix<T> S;        // original coordinates
  Matrix<T> S_inv;
  T p_minus_s;
  Matrix<T> Gbase[3];  // index i + 1 for i = -1, 0, 1

  // Permutation matrix taking permuted coordinates back to the original ones.
  Matrix<T> perm() const;
  const Matrix<T>& base(int i) const { return Gbase[i + 1]; }
};

// Requires the off-diagonal blocks coupling b = -1 to vanish and A33 to be
// diagonal. Throws SingularA22, SingularSchurBlock, InvariantViolation.
template <class T>
ResonantDecomposition<T> resonant_block_decompose(const Matrix<T>& A, const std::vector<int>& b, long p,
                                                  double s, bool need_schur_inverse = true);

// G_{j,b,i,h}: chibar_jb chi_h(x) G1 for i = 1, chibar_jb G_i for i in {0,-1}, h = -1.
template <class T>
Matrix<T> resonant_propagator(const ResonantDecomposition<T>& dec, const T& chibar_jb, double x, int i, int h,
                              const CutoffSpec& cut);

// prod_a chibar_{b(a)}(delta_a).
template <class T>
T block_cutoff(const std::vector<double>& deltas, const std::vector<int>& b, const CutoffSpec& cut) {
  T r = T(1);
  for (std::size_t a = 0; a < b.size(); ++a) r *= cut.chibar_as<T>(deltas[a], b[a]);
  return r;
}

// Counterterm supported on the b = 1 block that cancels the T-matrix between
// two small-divisor propagators: L11 = -[I, -B] T [I; -B^T].
template <class T>
Matrix<T> resonant_counterterm_matrix(const ResonantDecomposition<T>& dec, const Matrix<T>& Tm);

// X11 - (B X12^T + X12 B^T) + B X22 B^T for X = L + T, in permuted blocks.
template <class T>
Matrix<T> cancellation_residual(const ResonantDecomposition<T>& dec, const Matrix<T>& X);

// Propagator of a line entering a partially cancelled resonance:
// chi_h chibar_jb (G0(b_T) + G-1(b_T) - G0(b) - G-1(b)).
template <class T>
Matrix<T> regularized_propagator(const ResonantDecomposition<T>& dec_line, const ResonantDecomposition<T>& dec_T,
                                 const T& chibar_jb, double x, int h, const CutoffSpec& cut);

}  // namespace lindstedt
