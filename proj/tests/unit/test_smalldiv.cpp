#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <optional>

#include "lindstedt/errors.hpp"
#include "lindstedt/smalldiv.hpp"

using namespace lindstedt;

TEST(Delta, KernelModeEqualsEps) {
  FrequencyContext f;
  EXPECT_NEAR(delta<double>(1, f.D, f), f.eps, 1e-15);
  EXPECT_EQ(delta<Rational>(1, f.D, f), exact(f.eps));
}

TEST(Delta, ZeroTimeFrequency) {
  FrequencyContext f;
  f.mu = 0.1;
  EXPECT_DOUBLE_EQ(delta<double>(0, 5, f), 5.1);
}

TEST(Delta, ZeroMass) {
  FrequencyContext f;
  f.mu = 0.0;
  f.eps = 0.01;
  EXPECT_NEAR(delta<double>(13, 25, f), -0.87, 1e-12);
}

TEST(FrequencyContext, ValidateRelations) {
  FrequencyContext f;
  EXPECT_NO_THROW(f.validate());
  FrequencyContext g = f;
  g.tau = g.tau0 + 1.0;
  EXPECT_THROW(g.validate(), ConfigError);
  g = f;
  g.tau1 = g.tau0;
  EXPECT_THROW(g.validate(), ConfigError);
  g = f;
  g.gamma = g.gamma0;
  EXPECT_THROW(g.validate(), ConfigError);
}

TEST(Cutoff, SupportWindows) {
  CutoffSpec c;
  EXPECT_EQ(c.chi(0.5 * c.gamma), 1.0);
  EXPECT_EQ(c.chi(3.0 * c.gamma), 0.0);
  EXPECT_EQ(c.chibar(c.gamma / 16, 1), 1.0);
  EXPECT_EQ(c.chibar(c.gamma / 2, 1), 0.0);
}

TEST(Cutoff, PartitionOfUnityExact) {
  for (BumpProfile prof : {BumpProfile::Smoothstep, BumpProfile::ExpBump}) {
    CutoffSpec c;
    c.profile = prof;
    const int H = 12;
    for (int i = 0; i < 400; ++i) {
      const double x = std::ldexp(c.gamma, -H) * (1.0 + 0.37 * i);
      Rational s = 0;
      for (int h = -1; h <= H; ++h) s += c.chi_h_exact(x, h);
      EXPECT_EQ(s, Rational(1)) << bump_name(prof) << " x=" << x;
      Rational b = 0;
      for (int k = -1; k <= 1; ++k) b += c.chibar_exact(x, k);
      EXPECT_EQ(b, Rational(1));
    }
  }
}

TEST(Cutoff, ActiveScalesConsecutive) {
  CutoffSpec c;
  for (double x : {1e-1, 3e-3, 1.2e-4, 7e-6}) {
    const auto hs = c.active_scales(x);
    ASSERT_FALSE(hs.empty());
    ASSERT_LE(hs.size(), 2u);
    if (hs.size() == 2) EXPECT_EQ(hs[1], hs[0] + 1);
    double s = 0;
    for (int h : hs) s += c.chi_h(x, h);
    EXPECT_NEAR(s, 1.0, 1e-14);
  }
}

TEST(Cutoff, UnknownProfile) { EXPECT_THROW(parse_bump("gauss"), ConfigError); }

TEST(MuNonresonant, Examples) {
  EXPECT_FALSE(check_mu_nonresonant(0.0, 1e-3, 2.0, 10, 2).ok);
  // Rational mu is resonant: (5/2) 1 - 3 + 1/2 = 0.
  const auto half = check_mu_nonresonant(0.5, 1e-3, 2.0, 50, 2);
  EXPECT_FALSE(half.ok);
  EXPECT_EQ(half.n, 1);
  EXPECT_EQ(std::fabs(2.5 * half.n - half.p - half.a * 0.5), 0.0);
  EXPECT_TRUE(check_mu_nonresonant(std::sqrt(2.0) - 1.0, 1e-3, 2.0, 100, 2).ok);
}

TEST(MelnikovFirst, HalfIntegerFrequencyFails) {
  FrequencyContext f;
  const double eps = f.mu - 0.5;  // omega = 2.5
  const auto w = check_melnikov_first(eps, f);
  EXPECT_FALSE(w.ok);
  EXPECT_EQ(w.n, 2);
}

TEST(MelnikovFirst, EmptyRangeIsVacuous) {
  FrequencyContext f;
  f.n_max = 0;
  EXPECT_TRUE(check_melnikov_first(f.mu - 0.5, f).ok);
}

TEST(MelnikovFirst, DefaultPasses) {
  FrequencyContext f;
  EXPECT_TRUE(check_melnikov_first(f.eps, f).ok);
}

TEST(MelnikovSecond, ZeroShiftAndMissingBlock) {
  FrequencyContext f;
  f.n_max = 60;
  ClusterCatalog cat(2, ClusterConstants::defaults(2));
  const auto w = check_melnikov_second(f.eps, [](long, const ClusterRef&) { return std::optional<double>(0.0); }, f,
                                       cat);
  EXPECT_TRUE(w.ok);
  EXPECT_THROW(check_melnikov_second(f.eps, [](long, const ClusterRef&) { return std::optional<double>(); }, f, cat),
               MissingBlock);
}

TEST(OmegaBlocks, MembershipAndOrder) {
  FrequencyContext f;
  ClusterCatalog cat(2, ClusterConstants::defaults(2));
  const auto blocks = omega_blocks(f, cat, 30);
  ASSERT_FALSE(blocks.empty());
  EXPECT_TRUE(std::is_sorted(blocks.begin(), blocks.end()));
  for (const auto& [n, j] : blocks) {
    EXPECT_TRUE(omega_membership(n, j.p, f.mu, f.eps0, f.D));
    EXPECT_FALSE(n == 1 && j.p == f.D);
  }
  for (const auto& [n, j] : omega_blocks(f, cat, 130, 2)) EXPECT_GE(cat.cluster(j).d(), 2);
}

TEST(MeasureSweep, AlwaysTrue) {
  FrequencyContext f;
  const auto r = measure_sweep(0.05, 1000, named_predicate("always", f));
  EXPECT_EQ(r.fraction, 1.0);
  EXPECT_TRUE(r.excluded.empty());
}

TEST(MeasureSweep, TrendTowardsOne) {
  FrequencyContext f;
  double prev = 0.0;
  for (double e0 : {0.1, 0.05, 0.01}) {
    const auto r = measure_sweep(e0, 2000, named_predicate("first_melnikov", f));
    EXPECT_GE(r.fraction, prev);
    prev = r.fraction;
  }
  EXPECT_GT(prev, 0.99);
  EXPECT_THROW(named_predicate("nope", f), ConfigError);
}
