// Acceptance suite: one pass/fail line per criterion, exit code equals the
// number of failed criteria. Criteria with stated runtime limits fail when
// the limit is exceeded.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "segprior/bench.hpp"
#include "segprior/io.hpp"
#include "segprior/metrics.hpp"
#include "segprior/tape.hpp"
#include "support/fd.hpp"
#include "support/oracles.hpp"

using namespace segprior;
namespace fs = std::filesystem;

namespace {

struct Failure {
  std::string message;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw Failure{message};
}

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---- 1. exact EDT against the brute-force oracle --------------------------

std::string criterion_edt() {
  Rng rng(20250801);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    BinaryMask mask(GridDomain(1, 1), 1);
    switch (trial % 8) {
      case 0: {  // single pixel hugging a corner or edge
        const GridDomain dom(rng.uniform_int(2, 32), rng.uniform_int(2, 32));
        mask = BinaryMask(dom);
        const int corner = rng.uniform_int(0, 3);
        mask.at(corner < 2 ? 0 : dom.height - 1, corner % 2 == 0 ? 0 : dom.width - 1) = 1;
        break;
      }
      case 1: {  // one border line
        const GridDomain dom(rng.uniform_int(2, 32), rng.uniform_int(2, 32));
        mask = BinaryMask(dom);
        for (int c = 0; c < dom.width; ++c) mask.at(0, c) = 1;
        break;
      }
      case 2: {  // full mask
        mask = BinaryMask(GridDomain(rng.uniform_int(1, 32), rng.uniform_int(1, 32)), 1);
        break;
      }
      case 3: {  // very sparse
        const GridDomain dom(rng.uniform_int(4, 32), rng.uniform_int(4, 32));
        mask = oracles::random_mask(rng, dom, 0.01);
        if (mask.foreground_count() == 0) mask.at(dom.height / 2, dom.width / 2) = 1;
        break;
      }
      default: {
        const GridDomain dom(rng.uniform_int(1, 32), rng.uniform_int(1, 32));
        mask = oracles::random_mask(rng, dom, rng.uniform(0.05, 0.9));
        if (mask.foreground_count() == 0)
          mask[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(dom.size()) - 1))] = 1;
        break;
      }
    }
    const DistanceMap d = edt(mask);
    const auto expect = oracles::edt_squared(mask);
    for (std::size_t i = 0; i < expect.size(); ++i) {
      require(d.squared()[i] == expect[i],
              "EDT mismatch at trial " + std::to_string(trial) + " pixel " + std::to_string(i));
      ++checked;
    }
  }
  return std::to_string(checked) + " pixels over 200 masks, exact";
}

// ---- 2. gradient checks ----------------------------------------------------

std::string criterion_gradients() {
  Rng rng(7202518);
  const GridDomain dom(8, 8);
  double worst_smooth = 0.0;
  double worst_cldice = 0.0;

  for (int trial = 0; trial < 50; ++trial) {
    const BinaryMask gt = oracles::random_mask(rng, dom, rng.uniform(0.2, 0.5));
    const ScalarGrid pred = oracles::random_unit_grid(rng, dom, 0.01, 0.99);

    {
      const LossEval eval = dice_loss(pred, gt);
      const ScalarGrid g = fd::central_diff(
          [&](const ScalarGrid& x) { return dice_loss(x, gt).value; }, pred, 1e-4);
      for (std::size_t i = 0; i < pred.size(); ++i)
        worst_smooth = std::max(worst_smooth, fd::rel_err(g[i], eval.grad[i]));
    }
    if (!gt.uniform()) {
      const SignedDistanceMap phi = signed_distance(gt);
      const LossEval eval = boundary_loss(pred, phi);
      const ScalarGrid g = fd::central_diff(
          [&](const ScalarGrid& x) { return boundary_loss(x, phi).value; }, pred, 1e-4);
      for (std::size_t i = 0; i < pred.size(); ++i)
        worst_smooth = std::max(worst_smooth, fd::rel_err(g[i], eval.grad[i]));
    }
    {
      const LossEval eval = hausdorff_loss(pred, gt);
      const ScalarGrid g = fd::central_diff(
          [&](const ScalarGrid& x) { return hausdorff_loss(x, gt).value; }, pred, 1e-4);
      for (std::size_t i = 0; i < pred.size(); ++i) {
        if (std::abs(pred[i] - 0.5) < 1e-3) continue;  // threshold discontinuity
        worst_smooth = std::max(worst_smooth, fd::rel_err(g[i], eval.grad[i]));
      }
    }
    {
      // alternate between the low branch, the high branch and the zero band
      const double area = pred.sum();
      SizeBounds bounds(0.0, 1.0);
      if (trial % 3 == 0)
        bounds = SizeBounds(area + 2.0, area + 5.0);
      else if (trial % 3 == 1)
        bounds = SizeBounds(std::max(0.0, area - 5.0), area - 2.0);
      else
        bounds = SizeBounds(std::max(0.0, area - 3.0), area + 3.0);
      const LossEval eval = size_loss(pred, bounds);
      const ScalarGrid g = fd::central_diff(
          [&](const ScalarGrid& x) { return size_loss(x, bounds).value; }, pred, 1e-4);
      for (std::size_t i = 0; i < pred.size(); ++i)
        worst_smooth = std::max(worst_smooth, fd::rel_err(g[i], eval.grad[i]));
    }
    {
      // thin structure so both skeletons carry signal
      BinaryMask thin(dom);
      const int row = rng.uniform_int(1, 6);
      for (int c = 1; c < 7; ++c) thin.at(row, c) = 1;
      thin.at(rng.uniform_int(1, 6), rng.uniform_int(1, 6)) = 1;
      const int iters = 3;
      const LossEval eval = cldice_loss(pred, thin, iters);

      const ScalarGrid gt_skel = soft_skeleton(thin.to_scalar(), iters);
      Tape probe;
      const auto graph =
          detail::build_cldice_graph(probe, pred, thin.to_scalar(), gt_skel, iters, 1e-6);
      const auto excluded = fd::exclusion_mask(probe, Tape::NodeRef{graph.pred_node}, 1e-3);
      const ScalarGrid g = fd::central_diff(
          [&](const ScalarGrid& x) { return cldice_loss(x, thin, iters).value; }, pred, 1e-4);
      for (std::size_t i = 0; i < pred.size(); ++i) {
        if (excluded[i] || std::abs(pred[i] - 0.5) < 1e-3) continue;
        worst_cldice = std::max(worst_cldice, fd::rel_err(g[i], eval.grad[i]));
      }
    }
  }
  require(worst_smooth < 1e-4,
          "smooth-loss gradient error " + fmt_num(worst_smooth) + " >= 1e-4");
  require(worst_cldice < 1e-3, "clDice gradient error " + fmt_num(worst_cldice) + " >= 1e-3");
  return "max rel err: smooth " + fmt_num(worst_smooth) + ", clDice " + fmt_num(worst_cldice);
}

// ---- 3. hand-evaluated loss values -----------------------------------------

std::string criterion_hand_values() {
  {
    SignedDistanceMap phi;
    phi.values = ScalarGrid(GridDomain(1, 3), {1.0, -1.0, 1.0});
    const ScalarGrid half(GridDomain(1, 3), {0.5, 0.5, 0.5});
    const double v = boundary_loss(half, phi, false).value;
    require(std::abs(v - 0.5) < 1e-12, "boundary 1x3 value " + fmt_num(v) + " != 0.5");
  }
  {
    BinaryMask gt(GridDomain(1, 2), {1, 0});
    const ScalarGrid flipped(GridDomain(1, 2), {0.0, 1.0});
    const double v = hausdorff_loss(flipped, gt).value;
    require(std::abs(v - 2.0) < 1e-12, "hausdorff 1x2 value " + fmt_num(v) + " != 2");
  }
  {
    const LossEval inside = size_loss(ScalarGrid(GridDomain(1, 5), 1.0), SizeBounds(3.0, 7.0));
    require(inside.value == 0.0, "size in-band value " + fmt_num(inside.value) + " != 0");
    const LossEval above = size_loss(ScalarGrid(GridDomain(1, 9), 1.0), SizeBounds(3.0, 7.0));
    require(std::abs(above.value - 4.0) < 1e-12, "size above-band value != 4");
    require(std::abs(above.grad[0] - 4.0) < 1e-12, "size above-band gradient != +4");
    const LossEval below = size_loss(ScalarGrid(GridDomain(1, 1), 1.0), SizeBounds(3.0, 7.0));
    require(std::abs(below.value - 4.0) < 1e-12, "size below-band value != 4");
    require(std::abs(below.grad[0] + 4.0) < 1e-12, "size below-band gradient != -4");
  }
  {
    BinaryMask line(GridDomain(7, 7));
    for (int c = 0; c < 7; ++c) line.at(3, c) = 1;
    const double v = cldice_loss(line.to_scalar(), line, 3).value;
    require(v <= 1e-4, "perfect-line clDice loss " + fmt_num(v) + " > 1e-4");
  }
  return "boundary 0.5, hausdorff 2, size 0/4/4, clDice <= 1e-4";
}

// ---- 4. lambda schedule and composite identity -----------------------------

std::string criterion_schedule() {
  const LambdaSchedule sched;
  require(sched.at(0) == 0.01, "lambda(0) != 0.01");
  for (int e = 0; e <= 300; ++e) {
    const double expect = e <= 98 ? 0.01 + 0.01 * e : 0.99;
    require(std::abs(sched.at(e) - expect) < 1e-12,
            "lambda(" + std::to_string(e) + ") = " + fmt_num(sched.at(e)));
  }

  Rng rng(40404);
  const GridDomain dom(8, 8);
  const BinaryMask gt = oracles::random_mask(rng, dom, 0.4);
  const ScalarGrid pred = oracles::random_unit_grid(rng, dom);
  const LossEval dice = dice_loss(pred, gt);
  const LossEval prior = hausdorff_loss(pred, gt);
  const LossEval mixed = composite(dice, prior, 0.0);
  require(std::memcmp(&mixed.value, &dice.value, sizeof(double)) == 0,
          "composite value at lambda=0 not bit-identical");
  require(std::memcmp(mixed.grad.values().data(), dice.grad.values().data(),
                      dice.grad.size() * sizeof(double)) == 0,
          "composite gradient at lambda=0 not bit-identical");
  return "lambda ramp capped at 0.99; lambda=0 bit-identical to dice";
}

// ---- 5. metric oracles ------------------------------------------------------

std::string criterion_metric_oracles() {
  Rng rng(505050);
  const GridDomain dom(16, 16);
  int hd_defined = 0;
  for (int trial = 0; trial < 100; ++trial) {
    BinaryMask a = oracles::random_mask(rng, dom, rng.uniform(0.03, 0.6));
    BinaryMask b = oracles::random_mask(rng, dom, rng.uniform(0.03, 0.6));
    if (trial % 17 == 0) a = BinaryMask(dom);  // exercise the undefined branch
    const auto got = hausdorff_distance(a, b, 100.0, Connectivity::eight);
    const auto expect = oracles::hausdorff(a, b, 100.0, Connectivity::eight);
    require(got.has_value() == expect.has_value(), "HD definedness mismatch");
    if (got) {
      require(*got == *expect, "HD mismatch: " + fmt_num(*got) + " vs " + fmt_num(*expect));
      ++hd_defined;
    }

    // Dice against direct set counts
    std::size_t inter = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      inter += a[i] && b[i] ? 1u : 0u;
      na += a[i];
      nb += b[i];
    }
    const double dice_expect =
        na + nb == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
    require(dice_score(a, b) == dice_expect, "dice mismatch vs set counts");

    // component error against recursive flood fill
    for (Connectivity conn : {Connectivity::four, Connectivity::eight}) {
      const double expect_cc = std::abs(oracles::flood_fill_count(a, conn) -
                                        oracles::flood_fill_count(b, conn));
      require(cc_abs_error(a, b, conn) == expect_cc, "component count mismatch vs flood fill");
    }
  }
  return std::to_string(hd_defined) + " defined HD pairs exact; dice and CC counts exact";
}

// ---- 6. refiner convergence -------------------------------------------------

std::string criterion_refiner() {
  SyntheticSpec spec;
  spec.family = Family::blob;
  spec.dims = GridDomain(16, 16);
  spec.size_min_pct = 12.0;
  spec.size_max_pct = 25.0;
  spec.noise = 0.0;
  spec.perturbation = 0.0;
  spec.seed = 606060;
  const DatasetItem item = generate(spec, 1)[0];

  RefineConfig cfg;
  cfg.epochs = 200;
  cfg.steps_per_epoch = 5;
  cfg.learning_rate = 0.5;
  const LogitField flat(item.gt.domain(), 1);  // uniform zero logits
  const RefineResult res = refine(flat, item.gt, cfg);
  const double dice = validation_dice(res.prediction, item.gt);
  require(dice >= 0.99, "thresholded dice " + fmt_num(dice) + " < 0.99");
  return "thresholded dice " + fmt_num(dice) + " after 200 epochs x 5 steps";
}

// ---- directional benchmarks -------------------------------------------------

BenchPlan directional_base() {
  BenchPlan plan;
  plan.item_count = 40;
  plan.dataset.dims = GridDomain(64, 64);
  plan.dataset.noise = 0.7;
  plan.dataset.perturbation = 2.0;
  plan.bench.runs = 3;
  plan.refine.steps_per_epoch = 5;
  plan.refine.learning_rate = 25.0;
  return plan;
}

int runs_where(const BenchResult& res, const std::string& prior_name,
               const std::function<double(const RunStats&)>& metric, bool prior_leq) {
  const int base = res.config_index("dice");
  const int prior = res.config_index(prior_name);
  int wins = 0;
  for (std::size_t r = 0; r < res.run_stats[static_cast<std::size_t>(base)].size(); ++r) {
    const double b = metric(res.run_stats[static_cast<std::size_t>(base)][r][0]);
    const double p = metric(res.run_stats[static_cast<std::size_t>(prior)][r][0]);
    if (prior_leq ? p <= b : p >= b) ++wins;
  }
  return wins;
}

std::string describe_runs(const BenchResult& res, const std::string& prior_name,
                          const std::function<double(const RunStats&)>& metric) {
  const int base = res.config_index("dice");
  const int prior = res.config_index(prior_name);
  std::string out;
  for (std::size_t r = 0; r < res.run_stats[static_cast<std::size_t>(base)].size(); ++r) {
    out += " [" + fmt_num(metric(res.run_stats[static_cast<std::size_t>(base)][r][0])) + " vs " +
           fmt_num(metric(res.run_stats[static_cast<std::size_t>(prior)][r][0])) + "]";
  }
  return out;
}

std::string criterion_size_directional(double* run_seconds) {
  const auto dsc = [](const RunStats& s) { return s.dsc_mean; };
  const auto t0 = std::chrono::steady_clock::now();

  // tight per-item bounds on small scattered lesions: the size prior helps
  BenchPlan tight = directional_base();
  tight.dataset.family = Family::multi_lesion;
  tight.dataset.instances_min = 2;
  tight.dataset.instances_max = 6;
  tight.dataset.size_min_pct = 0.5;
  tight.dataset.size_max_pct = 2.0;
  tight.dataset.seed = 17;
  tight.bench.losses = {PriorKind::none, PriorKind::size};
  tight.bench.bounds_mode = BoundsMode::per_item;
  tight.refine.epochs = 24;
  const BenchResult tight_res = run_bench(tight);
  const int tight_wins = runs_where(tight_res, "dice+size", dsc, false);

  // one loose dataset-wide band over highly variable sizes: the prior drags
  BenchPlan loose = tight;
  loose.dataset.size_max_pct = 8.0;
  loose.bench.bounds_mode = BoundsMode::dataset_wide;
  loose.refine.epochs = 60;
  const BenchResult loose_res = run_bench(loose);
  const int loose_wins = runs_where(loose_res, "dice+size", dsc, true);

  *run_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 6.0;

  require(tight_wins >= 2, "tight bounds: dice+size >= dice in only " + std::to_string(tight_wins) +
                               "/3 runs;" + describe_runs(tight_res, "dice+size", dsc));
  require(loose_wins >= 2, "loose bounds: dice+size <= dice in only " + std::to_string(loose_wins) +
                               "/3 runs;" + describe_runs(loose_res, "dice+size", dsc));
  return "tight " + std::to_string(tight_wins) + "/3" +
         describe_runs(tight_res, "dice+size", dsc) + "; loose " + std::to_string(loose_wins) +
         "/3" + describe_runs(loose_res, "dice+size", dsc);
}

std::string criterion_boundary_directional(double* run_seconds) {
  const auto hd = [](const RunStats& s) { return s.hd_mean.value_or(1e9); };
  const auto t0 = std::chrono::steady_clock::now();

  BenchPlan plan = directional_base();
  plan.dataset.family = Family::blob;
  plan.dataset.instances_min = 2;
  plan.dataset.instances_max = 4;
  plan.dataset.size_min_pct = 3.0;
  plan.dataset.size_max_pct = 8.0;
  plan.dataset.seed = 17;
  plan.bench.losses = {PriorKind::none, PriorKind::boundary};
  plan.refine.epochs = 60;
  const BenchResult res = run_bench(plan);
  const int wins = runs_where(res, "dice+boundary", hd, true);

  *run_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 3.0;
  require(wins >= 2, "dice+boundary lowered mean HD in only " + std::to_string(wins) + "/3 runs;" +
                         describe_runs(res, "dice+boundary", hd));
  return std::to_string(wins) + "/3 runs" + describe_runs(res, "dice+boundary", hd);
}

std::string criterion_cldice_directional(double* run_seconds) {
  const auto cc = [](const RunStats& s) { return s.cc_mean; };
  const auto t0 = std::chrono::steady_clock::now();

  BenchPlan plan = directional_base();
  plan.dataset.family = Family::vessel;
  plan.dataset.instances_min = 1;
  plan.dataset.instances_max = 2;
  plan.dataset.size_min_pct = 1.5;
  plan.dataset.size_max_pct = 4.0;
  plan.dataset.perturbation = 3.0;
  plan.dataset.seed = 17;
  plan.bench.losses = {PriorKind::none, PriorKind::cldice};
  plan.refine.epochs = 80;
  plan.refine.loss.skeleton_iters = 10;
  const BenchResult res = run_bench(plan);
  const int wins = runs_where(res, "dice+cldice", cc, true);

  *run_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 3.0;
  require(wins >= 2, "dice+cldice lowered CC-MAE in only " + std::to_string(wins) + "/3 runs;" +
                         describe_runs(res, "dice+cldice", cc));
  return std::to_string(wins) + "/3 runs" + describe_runs(res, "dice+cldice", cc);
}

// ---- 10. determinism ---------------------------------------------------------

std::string criterion_determinism() {
  BenchPlan plan;
  plan.dataset.family = Family::multi_lesion;
  plan.dataset.dims = GridDomain(48, 48);
  plan.dataset.instances_min = 1;
  plan.dataset.instances_max = 4;
  plan.dataset.size_min_pct = 0.8;
  plan.dataset.size_max_pct = 4.0;
  plan.dataset.noise = 0.7;
  plan.dataset.perturbation = 1.5;
  plan.dataset.seed = 1010;
  plan.item_count = 10;
  plan.bench.runs = 2;
  plan.bench.losses = {PriorKind::none, PriorKind::boundary};
  plan.refine.epochs = 8;
  plan.refine.steps_per_epoch = 3;
  plan.refine.learning_rate = 5.0;

  const fs::path dir_a = fs::temp_directory_path() / "segprior_accept_det_a";
  const fs::path dir_b = fs::temp_directory_path() / "segprior_accept_det_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  plan.bench.out_dir = dir_a.string();
  run_bench(plan);
  plan.bench.out_dir = dir_b.string();
  run_bench(plan);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  int files = 0;
  for (const auto& entry : fs::directory_iterator(dir_a)) {
    const auto name = entry.path().filename();
    require(fs::exists(dir_b / name), "missing " + name.string() + " in second run");
    require(slurp(entry.path()) == slurp(dir_b / name), name.string() + " differs between runs");
    ++files;
  }
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  return std::to_string(files) + " report files byte-identical";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string title;
    double time_limit;                      // seconds; 0 = no limit
    std::function<std::string(double*)> run;  // fills per-run seconds when limited per run
    double per_run_limit = 0.0;
  };

  auto plain = [](const std::function<std::string()>& f) {
    return [f](double*) { return f(); };
  };

  const std::vector<Criterion> criteria = {
      {1, "EDT oracle equivalence (200 masks <= 32x32)", 10.0, plain(criterion_edt)},
      {2, "Gradient checks vs central finite differences", 60.0, plain(criterion_gradients)},
      {3, "Hand-evaluated loss values", 0.0, plain(criterion_hand_values)},
      {4, "Lambda schedule and composite identity", 0.0, plain(criterion_schedule)},
      {5, "Metric oracles (HD, Dice, CC)", 0.0, plain(criterion_metric_oracles)},
      {6, "Refiner convergence on a 16x16 blob", 30.0, plain(criterion_refiner)},
      {7, "Size prior direction (tight helps, loose drags)", 0.0, criterion_size_directional,
       300.0},
      {8, "Boundary prior lowers Hausdorff distance", 0.0, criterion_boundary_directional, 300.0},
      {9, "clDice prior lowers component-count error", 0.0, criterion_cldice_directional, 300.0},
      {10, "Benchmark determinism (byte-identical reports)", 0.0, plain(criterion_determinism)},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    double run_seconds = 0.0;
    try {
      detail = c.run(&run_seconds);
    } catch (const Failure& f) {
      ok = false;
      detail = f.message;
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ok && c.time_limit > 0.0 && elapsed > c.time_limit) {
      ok = false;
      detail = "runtime " + fmt_num(elapsed) + "s exceeds " + fmt_num(c.time_limit) + "s";
    }
    if (ok && c.per_run_limit > 0.0 && run_seconds > c.per_run_limit) {
      ok = false;
      detail = "per-run time " + fmt_num(run_seconds) + "s exceeds " + fmt_num(c.per_run_limit) + "s";
    }
    std::printf("[%s] %2d. %s (%.2fs) - %s\n", ok ? "PASS" : "FAIL", c.id, c.title.c_str(),
                elapsed, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  if (failures == 0)
    std::printf("all %zu criteria passed\n", criteria.size());
  else
    std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
