#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "lindstedt/errors.hpp"
#include "lindstedt/lattice.hpp"

using namespace lindstedt;

namespace {

std::set<IVec> as_set(const std::vector<IVec>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(EnumerateSphere, UnitOrbitAtTwo) {
  const auto pts = enumerate_sphere(2, 2);
  const std::set<IVec> want = {make_ivec({1, 1}), make_ivec({1, -1}), make_ivec({-1, 1}), make_ivec({-1, -1})};
  EXPECT_EQ(as_set(pts), want);
  EXPECT_TRUE(std::is_sorted(pts.begin(), pts.end()));
}

TEST(EnumerateSphere, TwentyFiveHasTwelvePoints) {
  const auto pts = enumerate_sphere(25, 2);
  ASSERT_EQ(pts.size(), 12u);
  for (const IVec& m : pts) EXPECT_EQ(norm2(m), 25);
  EXPECT_EQ(as_set(pts).count(make_ivec({-3, 4})), 1u);
  EXPECT_EQ(as_set(pts).count(make_ivec({0, -5})), 1u);
}

TEST(EnumerateSphere, SevenIsEmpty) { EXPECT_TRUE(enumerate_sphere(7, 2).empty()); }

TEST(EnumerateSphere, MatchesBruteForceCount) {
  for (int D : {2, 3}) {
    for (long p = 0; p <= 60; ++p) {
      long count = 0;
      const int r = 8;
      for (int a = -r; a <= r; ++a)
        for (int b = -r; b <= r; ++b)
          for (int c = (D == 3 ? -r : 0); c <= (D == 3 ? r : 0); ++c)
            if (a * a + b * b + c * c == p) ++count;
      EXPECT_EQ(static_cast<long>(enumerate_sphere(p, D).size()), count) << "D=" << D << " p=" << p;
    }
  }
}

TEST(EnumerateSphere, PositiveSector) {
  const auto pts = enumerate_sphere(25, 2, true);
  EXPECT_EQ(as_set(pts), (std::set<IVec>{make_ivec({3, 4}), make_ivec({4, 3})}));
}

TEST(ClusterSphere, PairsAtTwentyFive) {
  ClusterConstants cc = ClusterConstants::defaults(2);
  cc.C2 = 0.7;  // sqrt(2) < 0.7 * 25^(1/3) < sqrt(10)
  const auto cl = cluster_sphere(enumerate_sphere(25, 2), cc, 2);
  bool paired = false;
  for (const auto& c : cl) {
    if (c.index_of(make_ivec({5, 0})) >= 0) EXPECT_EQ(c.d(), 1);
    if (c.index_of(make_ivec({3, 4})) >= 0) {
      EXPECT_EQ(c.d(), 2);
      paired = c.index_of(make_ivec({4, 3})) >= 0;
    }
  }
  EXPECT_TRUE(paired);
  EXPECT_EQ(cl.size(), 8u);  // 4 sign pairs and 4 axis points
}

TEST(ClusterSphere, SinglePoint) {
  const auto cl = cluster_sphere({make_ivec({0, 5})}, ClusterConstants::defaults(2), 2);
  ASSERT_EQ(cl.size(), 1u);
  EXPECT_EQ(cl[0].d(), 1);
  EXPECT_EQ(cl[0].diam, 0.0);
}

TEST(ClusterSphere, DefaultsHoldOnSmallSpheres) {
  for (int D : {2, 3}) {
    const auto cc = ClusterConstants::defaults(D);
    for (long p = 1; p <= 400; ++p) {
      const auto cl = cluster_sphere(enumerate_sphere(p, D), cc, D);
      const auto chk = check_sphere_clusters(cl, cc, D);
      EXPECT_TRUE(chk.ok) << "D=" << D << " p=" << p << ": " << chk.failure;
    }
  }
}

TEST(ClusterCatalog, LocateRoundTrip) {
  ClusterCatalog cat(2, ClusterConstants::defaults(2));
  for (const IVec& m : enumerate_sphere(65, 2)) {
    const auto [ref, a] = cat.locate(m);
    EXPECT_EQ(ref.p, 65);
    EXPECT_EQ(cat.cluster(ref).members.at(a), m);
  }
}

TEST(OmegaMembership, Examples) {
  EXPECT_TRUE(omega_membership(10, 21, 0.1, 0.05, 2));
  EXPECT_FALSE(omega_membership(10, 20, 0.1, 0.05, 2));
  EXPECT_FALSE(omega_membership(1, 2, 0.3, 0.05, 2));
  EXPECT_FALSE(omega_membership(1, 3, 0.3, 0.05, 3));
  for (long p = 1; p < 10; ++p) EXPECT_FALSE(omega_membership(0, p, 0.1, 0.05, 2));
}

TEST(BourgainPartition, BallOfRadiusTwenty) {
  const auto bc = BourgainConstants::defaults(2);
  const auto cells = bourgain_partition(ball_points(2, 20.0), bc, 2);
  const auto chk = check_bourgain_cells(cells, bc, 2);
  EXPECT_TRUE(chk.ok) << chk.failure;
  std::size_t total = 0;
  for (const auto& c : cells) total += c.members.size();
  EXPECT_EQ(total, ball_points(2, 20.0).size());
}

TEST(BourgainPartition, DuplicateRejected) {
  const std::vector<IVec> modes = {make_ivec({1, 2}), make_ivec({1, 2})};
  EXPECT_THROW(bourgain_partition(modes, BourgainConstants::defaults(2), 2), DuplicateInput);
}

TEST(BourgainPartition, Singleton) {
  const auto cells = bourgain_partition({make_ivec({3, 1})}, BourgainConstants::defaults(2), 2);
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].diam, 0.0);
}

TEST(ResonantCells, Examples) {
  EXPECT_TRUE(build_resonant_cells({}, 0.05, 2).empty());

  BourgainCell c;
  c.members = {make_ivec({3, 4})};
  const auto rc = build_resonant_cells({c}, 0.05, 2);
  ASSERT_EQ(rc.size(), 1u);
  ASSERT_EQ(rc[0].members.size(), 1u);
  EXPECT_EQ(rc[0].members[0].n, 13);

  BourgainCell k;
  k.members = {make_ivec({1, 1})};
  EXPECT_TRUE(build_resonant_cells({k}, 0.05, 2).empty());
}
