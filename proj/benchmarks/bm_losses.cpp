#include <benchmark/benchmark.h>

#include "segprior/losses.hpp"
#include "segprior/refiner.hpp"
#include "segprior/rng.hpp"
#include "segprior/synth.hpp"

using namespace segprior;

namespace {

struct Fixture {
  BinaryMask gt;
  ScalarGrid pred;
  SignedDistanceMap phi;
  ScalarGrid gt_skel;

  explicit Fixture(int side) : gt(GridDomain(side, side)), pred(GridDomain(side, side)) {
    Rng rng(7);
    const int cy = side / 2, cx = side / 2, r2 = side * side / 36;
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c)
        gt.at(r, c) = (r - cy) * (r - cy) + (c - cx) * (c - cx) <= r2 ? 1 : 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
      pred[i] = std::min(1.0, std::max(0.0, gt[i] * 0.9 + 0.05 * rng.gaussian() + 0.03));
    phi = signed_distance(gt);
    gt_skel = soft_skeleton(gt.to_scalar(), 10);
  }
};

void BM_DiceLoss(benchmark::State& state) {
  const Fixture fx(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    LossEval e = dice_loss(fx.pred, fx.gt);
    benchmark::DoNotOptimize(e);
  }
}

void BM_BoundaryLoss(benchmark::State& state) {
  const Fixture fx(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    LossEval e = boundary_loss(fx.pred, fx.phi);
    benchmark::DoNotOptimize(e);
  }
}

void BM_HausdorffLoss(benchmark::State& state) {
  const Fixture fx(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    LossEval e = hausdorff_loss(fx.pred, fx.gt);
    benchmark::DoNotOptimize(e);
  }
}

void BM_CldiceLoss(benchmark::State& state) {
  const Fixture fx(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    LossEval e = detail::cldice_loss_cached(fx.pred, fx.gt, fx.gt_skel, 10, 1e-6);
    benchmark::DoNotOptimize(e);
  }
}

void BM_RefineEpochDice(benchmark::State& state) {
  SyntheticSpec spec;
  spec.family = Family::blob;
  spec.dims = GridDomain(64, 64);
  spec.size_min_pct = 4.0;
  spec.size_max_pct = 9.0;
  spec.seed = 13;
  const DatasetItem item = generate(spec, 1)[0];
  RefineConfig cfg;
  cfg.epochs = 1;
  cfg.steps_per_epoch = 5;
  cfg.learning_rate = 1.0;
  for (auto _ : state) {
    RefineResult r = refine(item.logits, item.gt, cfg);
    benchmark::DoNotOptimize(r);
  }
}

}  // namespace

BENCHMARK(BM_DiceLoss)->Arg(64)->Arg(256);
BENCHMARK(BM_BoundaryLoss)->Arg(64)->Arg(256);
BENCHMARK(BM_HausdorffLoss)->Arg(64)->Arg(256);
BENCHMARK(BM_CldiceLoss)->Arg(64);
BENCHMARK(BM_RefineEpochDice);
