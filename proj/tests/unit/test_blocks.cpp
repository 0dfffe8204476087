#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lindstedt/blocks.hpp"
#include "lindstedt/errors.hpp"

using namespace lindstedt;

namespace {

SphereCluster pair_cluster() {
  SphereCluster cl;
  cl.p = 25;
  cl.members = {make_ivec({3, 4}), make_ivec({4, 3})};
  return cl;
}

Matrix<Rational> random_symmetric(std::size_t d, std::mt19937_64& rng, int lo = -9, int hi = 9) {
  std::uniform_int_distribution<int> num(lo, hi);
  std::uniform_int_distribution<int> den(1, 7);
  Matrix<Rational> A(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      const int a = num(rng);
      const int b = den(rng);
      Rational x(a, b);
      x.canonicalize();
      A(i, j) = x;
      A(j, i) = x;
    }
  return A;
}

}  // namespace

TEST(MatrixNorms, Identity) {
  const std::vector<IVec> mem = {make_ivec({1, 0, 0}), make_ivec({0, 1, 0}), make_ivec({0, 0, 1})};
  const Norms n = matrix_norms(Matrix<double>::identity(3), mem, 0.0, default_rho(3));
  EXPECT_DOUBLE_EQ(n.rms, 1.0);
  EXPECT_DOUBLE_EQ(n.inf, 1.0);
  EXPECT_DOUBLE_EQ(n.sigma, 1.0);
}

TEST(MatrixNorms, SingleOffDiagonalEntry) {
  Matrix<double> A(2, 2);
  A(0, 1) = A(1, 0) = 0.3;
  const std::vector<IVec> mem = {make_ivec({3, 4}), make_ivec({4, 3})};
  const double sigma = 0.7, rho = default_rho(2);
  const Norms n = matrix_norms(A, mem, sigma, rho);
  EXPECT_NEAR(n.sigma, 0.3 * std::exp(sigma * std::pow(std::sqrt(2.0), rho)), 1e-15);
}

TEST(MatrixNorms, RandomSymmetricAgainstEigenvalues) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  const std::vector<IVec> mem = {make_ivec({1, 0}), make_ivec({0, 1}), make_ivec({-1, 0}), make_ivec({0, -1})};
  for (int t = 0; t < 50; ++t) {
    Matrix<double> A(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = i; j < 4; ++j) A(i, j) = A(j, i) = g(rng);
    const Norms n = matrix_norms(A, mem, 0.0, default_rho(2));
    double lmax = 0.0;
    for (double l : symmetric_eigenvalues(A)) lmax = std::max(lmax, std::fabs(l));
    // rms of the eigenvalues lies between max |lambda| / 2 and max |lambda|
    EXPECT_LE(n.rms, lmax * (1 + 1e-12));
    EXPECT_GE(n.rms, lmax / 2.0 * (1 - 1e-12));
  }
}

TEST(MatrixNorms, AsymmetricRejected) {
  Matrix<double> A(2, 2);
  A(0, 1) = 1.0;
  EXPECT_THROW(matrix_norms(A, {make_ivec({3, 4}), make_ivec({4, 3})}, 0.1, 0.1), AsymmetricInput);
}

TEST(DivisorState, ZeroCounterterm) {
  FrequencyContext f;
  CutoffSpec cut;
  const auto st = divisor_state<double>(12, pair_cluster(), Matrix<double>(), f, cut);
  const double d = delta<double>(12, 25, f);
  EXPECT_EQ(st.nu, 0.0);
  EXPECT_NEAR(st.x, std::fabs(d), 1e-15);
  EXPECT_NEAR(st.y, std::pow(25.0, f.s2()) * d, 1e-15);
}

TEST(DivisorState, ScalarShift) {
  FrequencyContext f;
  f.eps = 0.0129396;
  CutoffSpec cut;
  SphereCluster cl;
  cl.p = 26;
  cl.members = {make_ivec({1, 5})};
  const double lambda = 0.001;
  const auto bp = make_block_propagator<double>(11, cl, Matrix<double>::identity(1) * lambda, f, cut);
  ASSERT_GT(bp.state.chibar1, 0.0);
  const double want = std::fabs(bp.state.delta + std::pow(26.0, -f.s) * bp.state.chibar1 * lambda);
  EXPECT_NEAR(bp.state.x, want, 1e-15);
}

TEST(DivisorState, RandomCounterterm) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 0.01);
  FrequencyContext f;
  CutoffSpec cut;
  for (int t = 0; t < 20; ++t) {
    Matrix<double> M(2, 2);
    M(0, 0) = g(rng);
    M(1, 1) = g(rng);
    M(0, 1) = M(1, 0) = g(rng);
    const auto bp = make_block_propagator<double>(12, pair_cluster(), M, f, cut);
    Matrix<double> shifted = Matrix<double>::identity(2) * bp.state.delta;
    shifted += (std::pow(25.0, -f.s) * bp.state.chibar1) * M;
    const auto inv = try_inverse(shifted);
    ASSERT_TRUE(inv.has_value());
    EXPECT_NEAR(bp.state.x, 1.0 / rms_norm(*inv), 1e-12);
  }
}

TEST(Propagator, LargeDivisorIsDiagonal) {
  FrequencyContext f;
  CutoffSpec cut;
  const auto bp = make_block_propagator<double>(12, pair_cluster(), Matrix<double>(), f, cut);
  ASSERT_GE(std::fabs(bp.state.y), cut.gamma / 4);
  const Matrix<double> G = bp.G(-1, -1);
  EXPECT_NEAR(G(0, 0), cut.chibar(bp.state.y, -1) / 25.0 / bp.state.delta, 1e-15);
  EXPECT_EQ(G(0, 1), 0.0);
  EXPECT_TRUE(bp.G(3, 1).is_zero());
  EXPECT_THROW(bp.G(-1, 2), LabelInconsistency);
}

TEST(Propagator, SumOverLabelsIsFullInverse) {
  FrequencyContext f;
  f.eps = 0.0129396;
  CutoffSpec cut;
  SphereCluster cl;
  cl.p = 26;
  cl.members = {make_ivec({1, 5})};
  const auto bp = make_block_propagator<Rational>(11, cl, Matrix<Rational>(), f, cut);
  ASSERT_GT(bp.state.chibar1, 0.0);
  Matrix<Rational> sum(1, 1);
  for (const auto& [i, h] : bp.active_labels()) sum += bp.G(h, i);
  EXPECT_EQ(sum, bp.full());
}

TEST(Propagator, LargeDivisorBound) {
  FrequencyContext f;
  CutoffSpec cut;
  ClusterCatalog cat(2, ClusterConstants::defaults(2));
  for (long n = 1; n <= 60; ++n)
    for (long p = 2 * n - 3; p <= 2 * n + 3; ++p) {
      if (p <= 0 || (n == 1 && p == 2)) continue;
      for (const SphereCluster& cl : cat.sphere(p)) {
        const auto bp = make_block_propagator<double>(n, cl, Matrix<double>(), f, cut);
        const double bound = large_divisor_bound(f, cat.constants(), p);
        for (int i : {-1, 0}) EXPECT_LE(inf_norm(bp.G(-1, i)), bound) << "n=" << n << " p=" << p;
      }
    }
}

TEST(ResonantDecompose, AllLargeDivisors) {
  Matrix<Rational> A = Matrix<Rational>::diagonal({Rational(2), Rational(-3), Rational(5)});
  const auto dec = resonant_block_decompose(A, {-1, -1, -1}, 5, 1.0);
  const Matrix<Rational> Gm = dec.base(-1);
  EXPECT_EQ(Gm(1, 1), Rational(-1, 15));
  EXPECT_TRUE(dec.base(1).is_zero());
  Matrix<Rational> B = A;
  B(0, 1) = B(1, 0) = 1;
  EXPECT_THROW(resonant_block_decompose(B, {-1, -1, -1}, 5, 1.0), InvariantViolation);
}

TEST(ResonantDecompose, ScalarSchurComplement) {
  Matrix<Rational> A(2, 2);
  A(0, 0) = 3;
  A(0, 1) = A(1, 0) = 2;
  A(1, 1) = 5;
  const auto dec = resonant_block_decompose(A, {1, 0}, 2, 1.0);
  EXPECT_EQ(dec.A11t(0, 0), Rational(11, 5));
}

TEST(ResonantDecompose, LabelSumIsInverse) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> lab(-1, 1);
  int checked = 0;
  for (int t = 0; t < 40; ++t) {
    std::vector<int> b(5);
    for (int& x : b) x = lab(rng);
    Matrix<Rational> A = random_symmetric(5, rng);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        if (i != j && (b[i] == -1 || b[j] == -1)) A(i, j) = 0;
    for (std::size_t i = 0; i < 5; ++i)
      if (A(i, i) == 0) A(i, i) = 1;
    const auto inv = try_inverse(A);
    if (!inv) continue;
    ResonantDecomposition<Rational> dec;
    try {
      dec = resonant_block_decompose(A, b, 13, 1.0);
    } catch (const SingularA22&) {
      continue;
    } catch (const SingularSchurBlock&) {
      continue;
    }
    EXPECT_EQ(dec.base(1) + dec.base(0) + dec.base(-1), Rational(1, 13) * *inv);
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(ResonantCounterterm, CancellationExact) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    const std::vector<int> b = {1, 0, 1, 0};
    Matrix<Rational> A = random_symmetric(4, rng);
    for (std::size_t i = 0; i < 4; ++i) A(i, i) += 20;
    const auto dec = resonant_block_decompose(A, b, 5, 1.0);
    const Matrix<Rational> T = random_symmetric(4, rng);
    const Matrix<Rational> L = resonant_counterterm_matrix(dec, T);
    EXPECT_TRUE(cancellation_residual(dec, L + T).is_zero());
    EXPECT_EQ(L, L.transpose());
  }
}

TEST(ResonantCounterterm, ZeroAndNoSmallBlock) {
  std::mt19937_64 rng(9);
  Matrix<Rational> A = random_symmetric(3, rng);
  for (std::size_t i = 0; i < 3; ++i) A(i, i) += 20;
  const auto dec = resonant_block_decompose(A, {1, 1, 1}, 3, 1.0);
  EXPECT_TRUE(resonant_counterterm_matrix(dec, Matrix<Rational>(3, 3)).is_zero());
  const Matrix<Rational> T = random_symmetric(3, rng);
  EXPECT_EQ(resonant_counterterm_matrix(dec, T), -T);
}

TEST(DerivativeIdentities, RandomMatrices) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int t = 0; t < 30; ++t) {
    Matrix<double> A(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) A(i, j) = A(j, i) = g(rng) + (i == j ? 4.0 : 0.0);
    const auto chk = check_derivative_identities(A);
    EXPECT_LT(chk.inverse_rel_error, 1e-6);
    EXPECT_LT(chk.norm_rel_error, 1e-6);
  }
}
