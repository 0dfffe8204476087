#include "lindstedt/blocks.hpp"

#include <algorithm>
#include <cmath>

namespace lindstedt {

double default_rho(int D) {
  double f = 1.0;
  for (int i = 2; i <= D + 2; ++i) f *= i;
  return 1.0 / (1.0 + D * (1.0 + D * f / 2.0));
}

template <class T>
Norms matrix_norms(const Matrix<T>& A, const std::vector<IVec>& members, double sigma, double rho) {
  const std::size_t d = A.rows();
  if (A.cols() != d || members.size() != d)
    throw InvariantViolation("matrix_norms", "matrix and member list sizes disagree");
  double scale = inf_norm(A);
  if (!A.is_symmetric(1e-12 * std::max(1.0, scale))) throw AsymmetricInput("matrix_norms", "matrix is not symmetric");
  Norms r;
  r.inf = scale;
  r.rms = rms_norm(A);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double w = std::exp(sigma * std::pow(dist(members[i], members[j]), rho));
      r.sigma = std::max(r.sigma, std::fabs(to_double(A(i, j))) * w);
    }
  const double sd = std::sqrt(static_cast<double>(d));
  const double tol = 1e-12 * std::max(1.0, r.inf);
  if (r.rms / sd > r.inf + tol || r.inf > sd * r.rms + tol)
    throw InvariantViolation("matrix_norms", "norm equivalence bracket violated");
  return r;
}

double nu_bound_constant(int d) {
  const double dd = static_cast<double>(d);
  return (3.0 * std::sqrt(dd) + 2.0) * dd;
}

template <class T>
BlockPropagator<T> make_block_propagator(long n, const SphereCluster& cl, const Matrix<T>& M,
                                         const FrequencyContext& ctx, const CutoffSpec& cut, double nu_constant) {
  if (cl.p <= 0) throw LabelInconsistency("propagator", "block at the origin has no divisor scale");
  BlockPropagator<T> bp;
  bp.n = n;
  bp.j = ClusterRef{cl.p, cl.j};
  bp.p = cl.p;
  bp.d = cl.d();
  bp.cut = cut;
  bp.delta = delta<T>(n, cl.p, ctx);
  const double dlt = to_double(bp.delta);
  const double pd = static_cast<double>(cl.p);
  DivisorState& st = bp.state;
  st.delta = dlt;
  st.y = std::pow(pd, ctx.s2()) * dlt;
  st.chibar1 = cut.chibar(st.y, 1);
  bp.p_minus_s = real_pow<T>(cl.p, -ctx.s);
  bp.shifted = Matrix<T>::identity(bp.d) * bp.delta;
  const bool hasM = !M.empty() && !M.is_zero();
  if (hasM) {
    if (M.rows() != static_cast<std::size_t>(bp.d) || M.cols() != static_cast<std::size_t>(bp.d))
      throw LabelInconsistency("propagator", "counterterm block has the wrong size");
    if (st.chibar1 != 0.0) bp.shifted += (bp.p_minus_s * cut.chibar_as<T>(st.y, 1)) * M;
  }
  auto inv = try_inverse(bp.shifted);
  if (!inv)
    throw SingularShiftedMatrix("propagator", "shifted block singular at n=" + std::to_string(n) +
                                                  " p=" + std::to_string(cl.p));
  bp.inverse = std::move(*inv);
  const double sg = dlt >= 0 ? 1.0 : -1.0;
  if (hasM && st.chibar1 != 0.0) {
    st.x = 1.0 / rms_norm(bp.inverse);
    st.nu = (sg * st.x - dlt) * std::pow(pd, ctx.s - 2.0 * ctx.alpha);
  } else {
    // Unshifted block: the inverse is exactly diagonal.
    st.x = std::fabs(dlt);
  }
  const double Minf = hasM ? inf_norm(M) : 0.0;
  st.nu_ratio = Minf > 0 ? std::fabs(st.nu) / Minf : 0.0;
  const double C = nu_constant > 0 ? nu_constant : nu_bound_constant(bp.d);
  const double slack = 1e-9 * (1.0 + std::fabs(dlt)) * std::pow(pd, ctx.s1());
  if (std::fabs(st.nu) > C * Minf + slack)
    throw BoundViolation("divisor_state", "eigen-shift exceeds C |M|_inf at n=" + std::to_string(n) +
                                              " p=" + std::to_string(cl.p));
  return bp;
}

template <class T>
Matrix<T> BlockPropagator<T>::G(int h, int i) const {
  Matrix<T> z(d, d);
  if (i == -1 || i == 0) {
    if (h != -1) return z;
    const T c = cut.chibar_as<T>(state.y, i);
    if (is_zero(c)) return z;
    return (c * p_minus_s) * inverse;
  }
  if (i != 1) throw LabelInconsistency("propagator", "type label must be -1, 0 or 1");
  if (state.chibar1 == 0.0) return z;
  const T c = cut.chibar_as<T>(state.y, 1) * cut.chi_h_as<T>(state.x, h);
  if (is_zero(c)) return z;
  return (c * p_minus_s) * inverse;
}

template <class T>
T BlockPropagator<T>::entry(int h, int i, int a, int b) const {
  T c;
  if (i == 1) {
    if (state.chibar1 == 0.0) return T(0);
    c = cut.chibar_as<T>(state.y, 1) * cut.chi_h_as<T>(state.x, h);
  } else {
    if (h != -1) return T(0);
    c = cut.chibar_as<T>(state.y, i);
  }
  if (is_zero(c)) return T(0);
  return c * p_minus_s * inverse(a, b);
}

template <class T>
std::vector<std::pair<int, int>> BlockPropagator<T>::active_labels() const {
  std::vector<std::pair<int, int>> out;
  for (int i : {-1, 0})
    if (cut.chibar(state.y, i) != 0.0) out.emplace_back(i, -1);
  if (state.chibar1 != 0.0)
    for (int h : cut.active_scales(state.x)) out.emplace_back(1, h);
  return out;
}

double large_divisor_bound(const FrequencyContext& ctx, const ClusterConstants& cc, long p) {
  return 16.0 / ctx.gamma * std::sqrt(cc.C1) * std::pow(static_cast<double>(p), -0.75 * ctx.s);
}

template <class T>
Matrix<T> ResonantDecomposition<T>::perm() const {
  const std::size_t d = order.size();
  Matrix<T> P(d, d);
  for (std::size_t k = 0; k < d; ++k) P(order[k], k) = T(1);
  return P;
}

namespace {

template <class T>
Matrix<T> block_of(const Matrix<T>& A, std::size_t r0, std::size_t nr, std::size_t c0, std::size_t nc) {
  Matrix<T> B(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) B(i, j) = A(r0 + i, c0 + j);
  return B;
}

template <class T>
void put_block(Matrix<T>& A, std::size_t r0, std::size_t c0, const Matrix<T>& B) {
  for (std::size_t i = 0; i < B.rows(); ++i)
    for (std::size_t j = 0; j < B.cols(); ++j) A(r0 + i, c0 + j) = B(i, j);
}

template <class T>
bool near_equal(const Matrix<T>& a, const Matrix<T>& b) {
  if constexpr (is_exact_v<T>) {
    return a == b;
  } else {
    double scale = std::max(1.0, inf_norm(a));
    return inf_norm(a - b) <= 1e-9 * scale;
  }
}

}  // namespace

template <class T>
ResonantDecomposition<T> resonant_block_decompose(const Matrix<T>& A, const std::vector<int>& b, long p, double s,
                                                  bool need_schur_inverse) {
  const std::size_t d = A.rows();
  if (A.cols() != d || b.size() != d) throw InvariantViolation("resonant_block_decompose", "size mismatch");
  if (!A.is_symmetric(1e-12 * std::max(1.0, inf_norm(A))))
    throw AsymmetricInput("resonant_block_decompose", "block is not symmetric");
  ResonantDecomposition<T> dec;
  dec.b = b;
  for (int want : {1, 0, -1})
    for (std::size_t a = 0; a < d; ++a) {
      if (b[a] != 1 && b[a] != 0 && b[a] != -1)
        throw LabelInconsistency("resonant_block_decompose", "block label must be -1, 0 or 1");
      if (b[a] == want) dec.order.push_back(a);
    }
  dec.n1 = static_cast<std::size_t>(std::count(b.begin(), b.end(), 1));
  dec.n2 = static_cast<std::size_t>(std::count(b.begin(), b.end(), 0));
  dec.n3 = d - dec.n1 - dec.n2;
  const std::size_t n1 = dec.n1, n2 = dec.n2, n3 = dec.n3, N = n1 + n2;
  const Matrix<T> Ap = A.select(dec.order, dec.order);
  const Matrix<T> A11 = block_of(Ap, 0, n1, 0, n1);
  const Matrix<T> A12 = block_of(Ap, 0, n1, n1, n2);
  dec.A22 = block_of(Ap, n1, n2, n1, n2);
  dec.A33 = block_of(Ap, N, n3, N, n3);
  const Matrix<T> Aup3 = block_of(Ap, 0, N, N, n3);
  if (!Aup3.is_zero())
    throw InvariantViolation("resonant_block_decompose", "large-divisor indices couple to the others");
  for (std::size_t i = 0; i < n3; ++i)
    for (std::size_t j = 0; j < n3; ++j)
      if (i != j && !is_zero(dec.A33(i, j)))
        throw InvariantViolation("resonant_block_decompose", "large-divisor block is not diagonal");
  Matrix<T> A22inv(n2, n2);
  if (n2 > 0) {
    auto inv = try_inverse(dec.A22);
    if (!inv) throw SingularA22("resonant_block_decompose", "A22 is singular");
    A22inv = std::move(*inv);
  }
  dec.B = n2 > 0 ? A12 * A22inv : Matrix<T>(n1, 0);
  dec.A11t = n2 > 0 ? A11 - dec.B * A12.transpose() : A11;
  Matrix<T> A11tinv(n1, n1);
  if (n1 > 0) {
    auto inv = try_inverse(dec.A11t);
    if (inv) {
      A11tinv = std::move(*inv);
    } else if (need_schur_inverse) {
      throw SingularSchurBlock("resonant_block_decompose", "Schur complement is singular");
    }
  }
  Matrix<T> up = Matrix<T>::identity(d), upinv = Matrix<T>::identity(d);
  put_block(up, 0, n1, dec.B);
  put_block(upinv, 0, n1, -dec.B);
  const Matrix<T> P = dec.perm();
  dec.S = P * up;
  dec.S_inv = upinv * P.transpose();
  Matrix<T> At(d, d);
  put_block(At, 0, 0, dec.A11t);
  put_block(At, n1, n1, dec.A22);
  put_block(At, N, N, dec.A33);
  if (!near_equal(dec.S * At * dec.S.transpose(), A))
    throw InvariantViolation("resonant_block_decompose", "S A~ S^T does not reproduce the block");
  dec.p_minus_s = real_pow<T>(p, -s);
  Matrix<T> E1(d, d), E0(d, d), Em(d, d);
  put_block(E1, 0, 0, A11tinv);
  put_block(E0, n1, n1, A22inv);
  for (std::size_t i = 0; i < n3; ++i) {
    if (is_zero(dec.A33(i, i))) throw InvariantViolation("resonant_block_decompose", "zero large divisor");
    Em(N + i, N + i) = T(1) / dec.A33(i, i);
  }
  const Matrix<T> SinvT = dec.S_inv.transpose();
  dec.Gbase[2] = dec.p_minus_s * (SinvT * E1 * dec.S_inv);
  dec.Gbase[1] = dec.p_minus_s * (SinvT * E0 * dec.S_inv);
  dec.Gbase[0] = dec.p_minus_s * (SinvT * Em * dec.S_inv);
  return dec;
}

template <class T>
Matrix<T> resonant_propagator(const ResonantDecomposition<T>& dec, const T& chibar_jb, double x, int i, int h,
                              const CutoffSpec& cut) {
  const std::size_t d = dec.order.size();
  if (is_zero(chibar_jb)) return Matrix<T>(d, d);
  if (i == 1) {
    const T c = chibar_jb * cut.chi_h_as<T>(x, h);
    return c * dec.base(1);
  }
  if (h != -1) return Matrix<T>(d, d);
  return chibar_jb * dec.base(i);
}

template <class T>
Matrix<T> resonant_counterterm_matrix(const ResonantDecomposition<T>& dec, const Matrix<T>& Tm) {
  const std::size_t n1 = dec.n1, n2 = dec.n2, d = dec.order.size();
  if (!Tm.is_symmetric(1e-12 * std::max(1.0, inf_norm(Tm))))
    throw AsymmetricInput("resonant_counterterm", "T matrix is not symmetric");
  const Matrix<T> Tp = Tm.select(dec.order, dec.order);
  const Matrix<T> T11 = block_of(Tp, 0, n1, 0, n1);
  Matrix<T> L11 = T11;
  if (n2 > 0) {
    const Matrix<T> T12 = block_of(Tp, 0, n1, n1, n2);
    const Matrix<T> T22 = block_of(Tp, n1, n2, n1, n2);
    const Matrix<T> BT12t = dec.B * T12.transpose();
    L11 = T11 - BT12t - BT12t.transpose() + dec.B * T22 * dec.B.transpose();
  }
  L11 = -L11;
  Matrix<T> L(d, d);
  for (std::size_t a = 0; a < n1; ++a)
    for (std::size_t c = 0; c < n1; ++c) L(dec.order[a], dec.order[c]) = L11(a, c);
  return L;
}

template <class T>
Matrix<T> cancellation_residual(const ResonantDecomposition<T>& dec, const Matrix<T>& X) {
  const std::size_t n1 = dec.n1, n2 = dec.n2;
  const Matrix<T> Xp = X.select(dec.order, dec.order);
  Matrix<T> R = block_of(Xp, 0, n1, 0, n1);
  if (n2 > 0) {
    const Matrix<T> X12 = block_of(Xp, 0, n1, n1, n2);
    const Matrix<T> X22 = block_of(Xp, n1, n2, n1, n2);
    R -= dec.B * X12.transpose() + X12 * dec.B.transpose();
    R += dec.B * X22 * dec.B.transpose();
  }
  return R;
}

template <class T>
Matrix<T> regularized_propagator(const ResonantDecomposition<T>& dec_line, const ResonantDecomposition<T>& dec_T,
                                 const T& chibar_jb, double x, int h, const CutoffSpec& cut) {
  const T c = chibar_jb * cut.chi_h_as<T>(x, h);
  return c * (dec_T.base(0) + dec_T.base(-1) - dec_line.base(0) - dec_line.base(-1));
}

#define LINDSTEDT_INSTANTIATE(T)                                                                                  \
  template Norms matrix_norms<T>(const Matrix<T>&, const std::vector<IVec>&, double, double);                   \
  template BlockPropagator<T> make_block_propagator<T>(long, const SphereCluster&, const Matrix<T>&,            \
                                                       const FrequencyContext&, const CutoffSpec&, double);      \
  template struct BlockPropagator<T>;                                                                            \
  template struct ResonantDecomposition<T>;                                                                      \
  template ResonantDecomposition<T> resonant_block_decompose<T>(const Matrix<T>&, const std::vector<int>&, long, \
                                                                double, bool);                                   \
  template Matrix<T> resonant_propagator<T>(const ResonantDecomposition<T>&, const T&, double, int, int,        \
                                            const CutoffSpec&);                                                  \
  template Matrix<T> resonant_counterterm_matrix<T>(const ResonantDecomposition<T>&, const Matrix<T>&);         \
  template Matrix<T> cancellation_residual<T>(const ResonantDecomposition<T>&, const Matrix<T>&);               \
  template Matrix<T> regularized_propagator<T>(const ResonantDecomposition<T>&, const ResonantDecomposition<T>&, \
                                               const T&, double, int, const CutoffSpec&);

LINDSTEDT_INSTANTIATE(double)
LINDSTEDT_INSTANTIATE(Rational)

DerivativeCheck check_derivative_identities(const Matrix<double>& A, double step) {
  const std::size_t d = A.rows();
  const auto inv = try_inverse(A);
  if (!inv) throw SingularShiftedMatrix("derivative_identities", "matrix is not invertible");
  DerivativeCheck out;
  double inv_err = 0.0, inv_scale = 0.0, norm_err = 0.0, norm_scale = 0.0;
  const double nA = rms_norm(A);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      Matrix<double> Ap = A, Am = A;
      Ap(i, j) += step;
      Am(i, j) -= step;
      const auto ip = try_inverse(Ap), im = try_inverse(Am);
      if (!ip || !im) throw SingularShiftedMatrix("derivative_identities", "perturbed matrix is not invertible");
      for (std::size_t h = 0; h < d; ++h)
        for (std::size_t l = 0; l < d; ++l) {
          const double fd = ((*ip)(h, l) - (*im)(h, l)) / (2.0 * step);
          const double an = -(*inv)(h, i) * (*inv)(j, l);
          inv_err = std::max(inv_err, std::fabs(fd - an));
          inv_scale = std::max(inv_scale, std::fabs(an));
        }
      const double fd = (rms_norm(Ap) - rms_norm(Am)) / (2.0 * step);
      const double an = A(i, j) / (static_cast<double>(d) * nA);
      norm_err = std::max(norm_err, std::fabs(fd - an));
      norm_scale = std::max(norm_scale, std::fabs(an));
    }
  out.inverse_rel_error = inv_scale > 0 ? inv_err / inv_scale : inv_err;
  out.norm_rel_error = norm_scale > 0 ? norm_err / norm_scale : norm_err;
  return out;
}

}  // namespace lindstedt
