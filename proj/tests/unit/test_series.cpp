#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "lindstedt/errors.hpp"
#include "lindstedt/series.hpp"

using namespace lindstedt;

namespace {

std::shared_ptr<ClusterCatalog> catalog(int D = 2) {
  return std::make_shared<ClusterCatalog>(D, ClusterConstants::defaults(D));
}

FrequencyContext d3_context() {
  FrequencyContext f;
  f.D = 3;
  f.tau = f.tau0 + 1.5 + 3;
  return f;
}

}  // namespace

TEST(QEquation, LeadingAmplitude) {
  EXPECT_EQ(leading_q_squared(2, 1.0), Rational(2, 9));
  EXPECT_EQ(leading_q_squared(3, 1.0), Rational(1, 9));
  EXPECT_EQ(leading_q_squared(2, 0.0), Rational(1, 9));

  FrequencyContext f;
  const QSolution q2 = solve_q(0.0, 2, f, CutoffSpec{}, catalog());
  EXPECT_NEAR(q2.q, std::sqrt(2.0) / 3.0, 1e-15);
  ASSERT_TRUE(q2.q_squared.has_value());
  EXPECT_EQ(*q2.q_squared, Rational(2, 9));

  const FrequencyContext g = d3_context();
  const QSolution q3 = solve_q(0.0, 2, g, CutoffSpec{}, catalog(3));
  EXPECT_NEAR(q3.q, 1.0 / 3.0, 1e-15);
}

TEST(QEquation, LinearInSmallEta) {
  FrequencyContext f;
  auto cat = catalog();
  const double q0 = std::sqrt(2.0) / 3.0;
  double C = 0.0;
  for (double eta : {1e-4, 1e-3, 1e-2}) {
    const QSolution q = solve_q(eta, 2, f, CutoffSpec{}, cat);
    C = std::max(C, std::fabs(q.q - q0) / eta);
    EXPECT_LT(q.residual, 1e-10);
  }
  EXPECT_GT(C, 0.0);
  EXPECT_LT(C, 10.0);
}

TEST(Residual, FirstOrderSlope) {
  FrequencyContext f;
  const auto rep = residual_scan(log_grid(1e-4, 1e-2, 5), 1, f, CutoffSpec{}, catalog());
  EXPECT_NEAR(rep.slope, 2.0, 0.2);
}

TEST(Residual, ZeroAtZeroEta) {
  FrequencyContext f;
  const ResidualSample r = residual_at(0.0, 1, f, CutoffSpec{}, catalog());
  EXPECT_LT(r.max_residual, 1e-15);
  EXPECT_LT(r.max_kernel_residual, 1e-15);
}

TEST(Residual, SlopeOfExactPowerLaw) {
  const std::vector<double> x = log_grid(1e-3, 1e-1, 7);
  std::vector<double> y;
  for (double v : x) y.push_back(5.0 * v * v * v);
  EXPECT_NEAR(loglog_slope(x, y), 3.0, 1e-12);
  EXPECT_NEAR(x.front(), 1e-3, 1e-18);
  EXPECT_NEAR(x.back(), 1e-1, 1e-16);
}

TEST(Reconstruct, LeadingTerm) {
  const double q0 = std::sqrt(2.0) / 3.0;
  const auto u = leading_coefficients<double>(2, q0);
  EXPECT_NEAR(reconstruct(u, {M_PI / 2, M_PI / 2}, 0.0, 2), q0, 1e-15);
  EXPECT_NEAR(reconstruct(u, {0.0, 0.7}, 0.3, 2), 0.0, 1e-15);
  EXPECT_NEAR(reconstruct(u, {M_PI, 1.1}, 1.3, 2), 0.0, 1e-15);
  EXPECT_NEAR(reconstruct(u, {0.4, 1.1}, 0.9, 2), q0 * std::cos(0.9) * std::sin(0.4) * std::sin(1.1), 1e-15);
}

TEST(Cubic, SingleTriple) {
  Coefficients<Rational> a, b, c, out;
  a[{1, make_ivec({1, 1})}] = 2;
  b[{1, make_ivec({1, -1})}] = 3;
  c[{1, make_ivec({-1, -1})}] = 5;
  add_cubic(a, b, c, Rational(1), out);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.begin()->first, (ModeKey{1, make_ivec({3, 1})}));
  EXPECT_EQ(out.begin()->second, Rational(30));
}

TEST(Fixpoint, VanishesAwayFromResonance) {
  FrequencyContext f;
  FixpointOptions opt;
  opt.n_max = 4;
  const auto rep = compatibility_fixpoint(f.eps, 2, f, CutoffSpec{}, catalog(), opt);
  EXPECT_EQ(rep.norm, 0.0);
  EXPECT_EQ(rep.iterations, 1);
}

TEST(Fixpoint, NonzeroNearResonance) {
  FrequencyContext f;
  f.eps = 0.0129396;
  FixpointOptions opt;
  opt.n_max = 40;
  const auto rep = compatibility_fixpoint(f.eps, 1, f, CutoffSpec{}, catalog(), opt);
  EXPECT_GT(rep.norm, 0.0);
  EXPECT_LE(rep.norm, rep.bound);
  EXPECT_LE(rep.iterations, 5);
  for (double r : rep.ratios) EXPECT_LT(r, 1.0);
  EXPECT_EQ(rep.M.count({11, ClusterRef{26, 0}}) + rep.M.count({11, ClusterRef{26, 1}}) > 0, true);
}

TEST(Fixpoint, MelnikovFailureReported) {
  // Shift eps onto an exact divisor of a block far outside the order-1 support.
  FrequencyContext f;
  auto cat = catalog();
  double eps = -1.0;
  long bad_n = 0;
  for (long n = 20; n <= 200 && eps < 0; ++n)
    for (long p = 2 * n; p <= 3 * n && eps < 0; ++p) {
      const double e = ((f.D + f.mu) * n - p - f.mu) / n;
      if (e > 0 && e < f.eps0 && omega_membership(n, p, f.mu, f.eps0, f.D) && !cat->sphere(p).empty()) {
        eps = e + 1e-13;
        bad_n = n;
      }
    }
  ASSERT_GT(eps, 0.0);
  f.eps = eps;
  try {
    compatibility_fixpoint(eps, 1, f, CutoffSpec{}, cat);
    FAIL() << "no failure reported";
  } catch (const MelnikovFailure& e) {
    EXPECT_NE(std::string(e.what()).find("n=" + std::to_string(bad_n)), std::string::npos) << e.what();
  }
}
