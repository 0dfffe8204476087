#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lindstedt/bifurcation.hpp"
#include "lindstedt/errors.hpp"

using namespace lindstedt;

namespace {

PacketSet packet(int N, int D) {
  PacketOptions o;
  o.N = N;
  o.D = D;
  return construct_packet(o);
}

}  // namespace

TEST(Packet, SingleModeTwoDimensions) {
  const PacketSet P = packet(1, 2);
  ASSERT_EQ(P.N(), 1);
  EXPECT_EQ(P.members[0], make_ivec({1, 1}));
  EXPECT_NEAR(P.r, std::sqrt(2.0), 1e-15);
  EXPECT_TRUE(check_packet(P).ok);
}

TEST(Packet, SingleModeThreeDimensions) {
  const PacketSet P = packet(1, 3);
  ASSERT_EQ(P.N(), 1);
  EXPECT_EQ(P.members[0], make_ivec({1, 1, 1}));
}

TEST(Packet, TwoModesPassAllChecks) {
  const PacketSet P = packet(2, 2);
  ASSERT_EQ(P.N(), 2);
  EXPECT_TRUE(check_divisibility(P).ok);
  EXPECT_TRUE(check_condition_a(P).ok);
  EXPECT_TRUE(check_condition_b(P).ok);
  EXPECT_EQ(full_support(P).size(), 8u);
}

TEST(Packet, SignOrbit) {
  EXPECT_EQ(sign_orbit(make_ivec({1, 2}), 2).size(), 4u);
  EXPECT_EQ(sign_orbit(make_ivec({1, 1, 3}), 3).size(), 8u);
  EXPECT_EQ(sign_of(make_ivec({-1, 2}), 2), -1);
  EXPECT_EQ(sign_of(make_ivec({-1, -2, 1}), 3), 1);
}

TEST(Amplitudes, SingleMode) {
  const Amplitudes a2 = amplitudes(packet(1, 2));
  ASSERT_TRUE(a2.A2_exact.has_value());
  EXPECT_EQ(*a2.A2_exact, Rational(2, 9));
  EXPECT_DOUBLE_EQ(a2.M, 4.0);
  ASSERT_EQ(a2.a.size(), 1u);
  EXPECT_NEAR(a2.a[0], std::sqrt(2.0) / 3.0, 1e-15);
  EXPECT_EQ(*a2.A2_exact, leading_q_squared(2, 1.0));

  const Amplitudes a3 = amplitudes(packet(1, 3));
  EXPECT_EQ(*a3.A2_exact, Rational(1, 9));
  EXPECT_DOUBLE_EQ(a3.M, 9.0);
  EXPECT_NEAR(a3.a[0], 1.0 / 3.0, 1e-15);
}

TEST(Amplitudes, ResidualsVanishExactly) {
  for (int N : {1, 2}) {
    const PacketSet P = packet(N, 2);
    const Amplitudes a = amplitudes(P);
    const auto r = bifurcation_residual(P, a);
    EXPECT_TRUE(r.exact);
    EXPECT_TRUE(r.zero) << "N=" << N << " max=" << r.max_abs;
    EXPECT_TRUE(amplitude_residual(P, a).zero);
  }
}

TEST(JOperator, FarModesAreDiagonal) {
  const PacketSet P = packet(1, 2);
  const Amplitudes a = amplitudes(P);
  const JOperator J(P, a);
  EXPECT_NE(J.entry(make_ivec({1, 1}), make_ivec({1, 1})), 0.0);
  const IVec far = make_ivec({30, 40});
  double off = 0.0;
  for (const IVec& nb : J.neighbours(far)) off = std::max(off, std::fabs(J.entry(far, nb)));
  EXPECT_LT(off, 1e-6 * std::fabs(J.entry(far, far)));
}

TEST(JBlocks, BoundedBlocks) {
  for (int N : {1, 2}) {
    const PacketSet P = packet(N, 2);
    const JOperator J(P, amplitudes(P));
    const BlockPartition bp = find_blocks(J, 2000, 50);
    EXPECT_LE(bp.max_size, 50u);
    EXPECT_TRUE(bp.offblock_zero);
    for (const JBlock& b : bp.blocks) {
      const Matrix<double> R = restrict(J, b.modes);
      EXPECT_TRUE(R.is_symmetric(1e-12 * std::max(1.0, inf_norm(R))));
    }
  }
}

TEST(LogDeterminant, AgreesWithDeterminant) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int t = 0; t < 40; ++t) {
    const std::size_t d = 1 + t % 6;
    Matrix<double> A(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) A(i, j) = g(rng);
    const double det = determinant(A);
    const LogDeterminant ld = log_determinant(A);
    EXPECT_EQ(ld.sign, det > 0 ? 1 : -1);
    EXPECT_NEAR(ld.log10_abs, std::log10(std::fabs(det)), 1e-10);
  }
  Matrix<double> S(2, 2);
  S(0, 0) = S(0, 1) = S(1, 0) = S(1, 1) = 1.0;
  EXPECT_EQ(log_determinant(S).sign, 0);
}

TEST(LogDeterminant, NoOverflow) {
  Matrix<double> A = Matrix<double>::identity(400) * 1e5;
  const LogDeterminant ld = log_determinant(A);
  EXPECT_EQ(ld.sign, 1);
  EXPECT_NEAR(ld.log10_abs, 2000.0, 1e-9);
}

TEST(DeterminantScan, HeadBlockNonzero) {
  const PacketSet P = packet(1, 2);
  const DetScan scan = scan_J11(P, {0.5, 1.0, 1.5, 2.0});
  EXPECT_FALSE(scan.identically_zero);
  ASSERT_EQ(scan.samples.size(), 4u);
  for (const DetSample& s : scan.samples) EXPECT_NE(s.sign, 0);
}

TEST(Chains, BoundAndLoops) {
  EXPECT_NEAR(log10_chain_bound(1), std::log10(2.0), 1e-15);
  EXPECT_GT(log10_chain_bound(3), log10_chain_bound(2));
  const PacketSet P = packet(2, 2);
  const JOperator J(P, amplitudes(P));
  const BlockPartition bp = find_blocks(J, 500, 50);
  const LoopReport r = loop_scan(P, bp, 300, 30, 1, 50);
  EXPECT_TRUE(r.ok);
  EXPECT_EQ(r.repeat_failures, 0);
  EXPECT_GT(r.repeats_checked, 0);
}

TEST(ResonantSeries, ConsistentWithLeadingAmplitude) {
  const PacketSet P = packet(1, 2);
  const Amplitudes a = amplitudes(P);
  const ResidualSample r0 = resonant_residual(P, a, 0.0, 1);
  EXPECT_LT(r0.max_residual, 1e-14);
  const ResidualSample r1 = resonant_residual(P, a, 1e-3, 1);
  const ResidualSample r2 = resonant_residual(P, a, 1e-2, 1);
  const double slope = std::log10(r2.max_residual / r1.max_residual);
  EXPECT_NEAR(slope, 2.0, 0.2);
}
