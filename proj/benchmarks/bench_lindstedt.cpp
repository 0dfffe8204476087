#include <benchmark/benchmark.h>

#include <memory>

#include "lindstedt/bifurcation.hpp"
#include "lindstedt/lattice.hpp"
#include "lindstedt/series.hpp"
#include "lindstedt/trees.hpp"

using namespace lindstedt;

namespace {

std::shared_ptr<ClusterCatalog> catalog(int D = 2) {
  return std::make_shared<ClusterCatalog>(D, ClusterConstants::defaults(D));
}

PacketSet packet(int N) {
  PacketOptions o;
  o.N = N;
  return construct_packet(o);
}

}  // namespace

// Enumerates every renormalized tree of order k over the support.
static void BM_TreeEnumeration(benchmark::State& st) {
  const int k = static_cast<int>(st.range(0));
  FrequencyContext f;
  auto cat = catalog();
  long trees = 0;
  for (auto _ : st) {
    ExpansionContext<double> ctx(f, CutoffSpec{}, cat, 1.0);
    TreeExpansion<double> te(ctx, TreeMode::Renormalized, nullptr, k);
    trees = 0;
    for (const auto& [n, m] : te.support(k)) te.for_each(k, n, m, [&](const LabelledTree&) { ++trees; });
    benchmark::DoNotOptimize(trees);
  }
  st.counters["trees"] = static_cast<double>(trees);
}
BENCHMARK(BM_TreeEnumeration)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

template <class T>
static void BM_RecursionOracle(benchmark::State& st) {
  const int K = static_cast<int>(st.range(0));
  FrequencyContext f;
  auto cat = catalog();
  for (auto _ : st) {
    ExpansionContext<T> ctx(f, CutoffSpec{}, cat, T(1));
    RecursionOracle<T> oracle(ctx);
    benchmark::DoNotOptimize(oracle.solve(K).orders.size());
  }
}
BENCHMARK_TEMPLATE(BM_RecursionOracle, double)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_RecursionOracle, Rational)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

// Enumeration plus partition of every sphere up to p_max.
static void BM_ClusterSphere(benchmark::State& st) {
  const int D = static_cast<int>(st.range(0));
  const long p_max = st.range(1);
  const ClusterConstants cc = ClusterConstants::defaults(D);
  for (auto _ : st) {
    std::size_t clusters = 0;
    for (long p = 1; p <= p_max; ++p) clusters += cluster_sphere(enumerate_sphere(p, D), cc, D).size();
    benchmark::DoNotOptimize(clusters);
  }
}
BENCHMARK(BM_ClusterSphere)->Args({2, 2000})->Args({3, 500})->Unit(benchmark::kMillisecond);

static void BM_BourgainPartition(benchmark::State& st) {
  const auto modes = ball_points(2, static_cast<double>(st.range(0)));
  const BourgainConstants bc = BourgainConstants::defaults(2);
  for (auto _ : st) benchmark::DoNotOptimize(bourgain_partition(modes, bc, 2).size());
}
BENCHMARK(BM_BourgainPartition)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_FindBlocks(benchmark::State& st) {
  const PacketSet P = packet(static_cast<int>(st.range(0)));
  const JOperator J(P, amplitudes(P));
  for (auto _ : st) benchmark::DoNotOptimize(find_blocks(J, st.range(1), 50).blocks.size());
}
BENCHMARK(BM_FindBlocks)->Args({1, 2000})->Args({2, 2000})->Unit(benchmark::kMillisecond);

static void BM_ScanJ11(benchmark::State& st) {
  const PacketSet P = packet(static_cast<int>(st.range(0)));
  std::vector<double> grid;
  for (int i = 0; i < 20; ++i) grid.push_back(0.5 + 1.5 * i / 19.0);
  for (auto _ : st) benchmark::DoNotOptimize(scan_J11(P, grid).samples.size());
}
BENCHMARK(BM_ScanJ11)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
