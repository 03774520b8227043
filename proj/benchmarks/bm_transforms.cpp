#include <benchmark/benchmark.h>

#include "segprior/rng.hpp"
#include "segprior/transforms.hpp"

using namespace segprior;

namespace {

BinaryMask random_mask(int side, double density, std::uint64_t seed) {
  Rng rng(seed);
  BinaryMask m(GridDomain(side, side));
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.next_unit() < density ? 1 : 0;
  if (m.foreground_count() == 0) m[0] = 1;
  return m;
}

void BM_Edt(benchmark::State& state) {
  const BinaryMask mask = random_mask(static_cast<int>(state.range(0)), 0.05, 1);
  for (auto _ : state) {
    DistanceMap d = edt(mask);
    benchmark::DoNotOptimize(d);
  }
  state.SetItemsProcessed(state.iterations() * mask.size());
}

void BM_SignedDistance(benchmark::State& state) {
  const BinaryMask mask = random_mask(static_cast<int>(state.range(0)), 0.05, 2);
  for (auto _ : state) {
    SignedDistanceMap s = signed_distance(mask);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * mask.size());
}

void BM_ConnectedComponents(benchmark::State& state) {
  const BinaryMask mask = random_mask(static_cast<int>(state.range(0)), 0.4, 3);
  for (auto _ : state) {
    ComponentLabeling lab = connected_components(mask);
    benchmark::DoNotOptimize(lab);
  }
  state.SetItemsProcessed(state.iterations() * mask.size());
}

void BM_SoftSkeleton(benchmark::State& state) {
  const BinaryMask mask = random_mask(64, 0.2, 4);
  const ScalarGrid p = mask.to_scalar();
  const int iters = static_cast<int>(state.range(0));
  for (auto _ : state) {
    ScalarGrid s = soft_skeleton(p, iters);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * p.size());
}

}  // namespace

BENCHMARK(BM_Edt)->Arg(64)->Arg(256);
BENCHMARK(BM_SignedDistance)->Arg(64)->Arg(256);
BENCHMARK(BM_ConnectedComponents)->Arg(64)->Arg(256);
BENCHMARK(BM_SoftSkeleton)->Arg(5)->Arg(10);
