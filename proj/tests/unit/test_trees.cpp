#include <gtest/gtest.h>

#include <memory>
#include <set>

#include "lindstedt/errors.hpp"
#include "lindstedt/series.hpp"
#include "lindstedt/trees.hpp"

using namespace lindstedt;

namespace {

std::shared_ptr<ClusterCatalog> catalog(int D = 2) {
  return std::make_shared<ClusterCatalog>(D, ClusterConstants::defaults(D));
}

std::vector<IVec> unit_orbit(int D) { return enumerate_sphere(D, D); }

}  // namespace

TEST(TreeEnumeration, FirstOrderAtThreeThree) {
  FrequencyContext f;
  auto cat = catalog();
  ExpansionContext<Rational> ctx(f, CutoffSpec{}, cat, Rational(1));
  TreeExpansion<Rational> te(ctx, TreeMode::Renormalized, nullptr, 3);
  const IVec root = make_ivec({3, 3});

  long trees = 0;
  te.for_each(1, 1, root, [&](const LabelledTree& t) {
    ++trees;
    EXPECT_TRUE(check_conservation(t));
    EXPECT_EQ(t.order(), 1);
    EXPECT_EQ(t.endpoint_count(), 3);
  });

  long triples = 0;
  Rational signs = 0;
  const auto L1 = unit_orbit(2);
  for (const IVec& a : L1)
    for (const IVec& b : L1)
      for (const IVec& c : L1)
        if (a + b - c == root) {
          ++triples;
          signs += ctx.endpoint_factor(a) * ctx.endpoint_factor(b) * ctx.endpoint_factor(c);
        }
  EXPECT_EQ(trees, triples);
  const Rational want = Rational(1, 18) / delta<Rational>(1, 18, f) * signs;
  EXPECT_EQ(te.sum(1, 1, root), want);
}

TEST(TreeEnumeration, FirstOrderNeedsUnitFrequency) {
  FrequencyContext f;
  auto cat = catalog();
  ExpansionContext<Rational> ctx(f, CutoffSpec{}, cat, Rational(1));
  TreeExpansion<Rational> te(ctx, TreeMode::Renormalized, nullptr, 3);
  for (long n : {-1L, 0L, 2L, 3L})
    for (const IVec& m : {make_ivec({3, 3}), make_ivec({1, 1}), make_ivec({3, 1})}) {
      long count = 0;
      te.for_each(1, n, m, [&](const LabelledTree&) { ++count; });
      EXPECT_EQ(count, 0) << "n=" << n;
    }
}

TEST(TreeEnumeration, FarRootsAreEmpty) {
  FrequencyContext f;
  auto cat = catalog();
  ExpansionContext<Rational> ctx(f, CutoffSpec{}, cat, Rational(1));
  TreeExpansion<Rational> te(ctx, TreeMode::Renormalized, nullptr, 3);
  long count = 0;
  te.for_each(1, 40, make_ivec({3, 3}), [&](const LabelledTree&) { ++count; });
  te.for_each(2, 5, make_ivec({40, 1}), [&](const LabelledTree&) { ++count; });
  EXPECT_EQ(count, 0);
}

TEST(TreeValues, AgreeWithRecursion) {
  FrequencyContext f;
  auto cat = catalog();
  ExpansionContext<Rational> ctx(f, CutoffSpec{}, cat, Rational(1));
  TreeExpansion<Rational> te(ctx, TreeMode::Renormalized, nullptr, 2);
  RecursionOracle<Rational> oracle(ctx);
  for (int k = 1; k <= 2; ++k) {
    std::set<ModeKey> keys(te.support(k).begin(), te.support(k).end());
    for (const auto& kv : oracle.order(k)) keys.insert(kv.first);
    for (const auto& [n, m] : keys) {
      const auto it = oracle.order(k).find({n, m});
      const Rational want = it == oracle.order(k).end() ? Rational(0) : it->second;
      EXPECT_EQ(te.sum(k, n, m), want) << "k=" << k << " n=" << n << " m=" << to_string(m, 2);
    }
  }
}

TEST(TreeValues, HomogeneousInAmplitude) {
  FrequencyContext f;
  auto cat = catalog();
  ExpansionContext<Rational> one(f, CutoffSpec{}, cat, Rational(1));
  ExpansionContext<Rational> two(f, CutoffSpec{}, cat, Rational(2));
  TreeExpansion<Rational> t1(one, TreeMode::Renormalized, nullptr, 2);
  TreeExpansion<Rational> t2(two, TreeMode::Renormalized, nullptr, 2);
  for (int k = 1; k <= 2; ++k) {
    const Rational factor = int_pow<Rational>(2, 2 * k + 1);
    int nonzero = 0;
    for (const auto& [n, m] : t1.support(k)) {
      const Rational a = t1.sum(k, n, m);
      EXPECT_EQ(t2.sum(k, n, m), Rational(factor * a));
      if (a != 0) ++nonzero;
    }
    EXPECT_GT(nonzero, 0);
  }
}

TEST(TreeScales, NoClustersWhenAllLinesAreLarge) {
  FrequencyContext f;
  auto cat = catalog();
  ExpansionContext<Rational> ctx(f, CutoffSpec{}, cat, Rational(1));
  TreeExpansion<Rational> te(ctx, TreeMode::Renormalized, nullptr, 2);
  for (int k = 1; k <= 2; ++k)
    for (const auto& [n, m] : te.support(k))
      te.for_each(k, n, m, [&](const LabelledTree& t) {
        if (t.max_scale() >= 0) return;
        for (const auto& c : find_clusters(t)) EXPECT_LT(c.scale, 0);
        EXPECT_TRUE(find_resonances(t, f.tau).empty());
        EXPECT_TRUE(bryuno_report(t, 1.0, 1.0 / 3.0, f.tau).ok);
        EXPECT_EQ(extension_factor(t, ctx), 1.0);
      });
}

TEST(Bryuno, InflatedScaleViolates) {
  FrequencyContext f;
  auto cat = catalog();
  ExpansionContext<Rational> ctx(f, CutoffSpec{}, cat, Rational(1));
  TreeExpansion<Rational> te(ctx, TreeMode::Renormalized, nullptr, 1);
  LabelledTree tree;
  te.for_each(1, 1, make_ivec({3, 3}), [&](const LabelledTree& t) { tree = t; });
  ASSERT_FALSE(tree.nodes.empty());
  EXPECT_NO_THROW(bryuno_assert(tree, 1.0, 1.0 / 3.0, f.tau));
  tree.nodes[0].line.i = 1;
  tree.nodes[0].line.h = 5;
  EXPECT_THROW(bryuno_assert(tree, 1.0, 1.0 / 3.0, f.tau), BoundViolation);
}

TEST(Counterterms, OutsideIndexSetIsZero) {
  FrequencyContext f;
  auto cat = catalog();
  ExpansionContext<Rational> ctx(f, CutoffSpec{}, cat, Rational(1));
  TreeExpansion<Rational> te(ctx, TreeMode::Renormalized, nullptr, 2);
  CountertermTable<Rational> table([&](int k, long n, const ClusterRef& j) { return te.family_sums(k, n, j); },
                                   [&](long n, const ClusterRef& j) { return ctx.in_omega(n, j); }, 2);
  const ClusterRef j{25, 0};
  ASSERT_FALSE(ctx.in_omega(3, j));
  EXPECT_TRUE(table.L(1, 3, j, 2, cat->cluster(j).d()).is_zero());
}

TEST(Counterterms, SymmetricAtLowOrder) {
  FrequencyContext f;
  auto cat = catalog();
  ExpansionContext<Rational> ctx(f, CutoffSpec{}, cat, Rational(1));
  TreeExpansion<Rational> te(ctx, TreeMode::Renormalized, nullptr, 2);
  CountertermTable<Rational> table([&](int k, long n, const ClusterRef& j) { return te.family_sums(k, n, j); },
                                   [&](long n, const ClusterRef& j) { return ctx.in_omega(n, j); }, 2);
  long blocks = 0;
  for (const auto& [n, j] : omega_blocks(f, *cat, 6)) {
    ++blocks;
    for (int k = 1; k <= 2; ++k)
      for (const auto& [h1, V] : table.sums(k, n, j)) EXPECT_EQ(V, V.transpose()) << "n=" << n << " p=" << j.p;
  }
  EXPECT_GT(blocks, 0);
}
