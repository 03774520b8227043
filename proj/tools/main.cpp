// Command-line front end: synthetic dataset generation, single-item
// refinement, the full benchmark harness, mask scoring, and distance
// transform dumps.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "segprior/bench.hpp"
#include "segprior/io.hpp"
#include "segprior/metrics.hpp"

namespace fs = std::filesystem;
using namespace segprior;

namespace {

Connectivity parse_connectivity(int v) {
  if (v == 4) return Connectivity::four;
  if (v == 8) return Connectivity::eight;
  throw ValidationError("connectivity must be 4 or 8");
}

MaskStack load_gt(const fs::path& path) {
  if (path.extension() == ".pgm") return MaskStack::single(read_pgm(path));
  const MultiClassStack stack = read_psg1_stack(path);
  std::vector<BinaryMask> layers;
  for (int c = 0; c < stack.classes(); ++c) {
    BinaryMask m(stack.domain());
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double v = stack.layer(c)[i];
      if (v != 0.0 && v != 1.0)
        throw ValidationError(path.string() + ": ground-truth layer " + std::to_string(c) +
                              " is not binary at pixel " + std::to_string(i));
      m[i] = v == 1.0 ? 1 : 0;
    }
    layers.push_back(std::move(m));
  }
  return MaskStack(std::move(layers));
}

LogitField load_logits(const fs::path& path) {
  const MultiClassStack stack = read_psg1_stack(path);
  std::vector<ScalarGrid> layers;
  for (int c = 0; c < stack.classes(); ++c) layers.push_back(stack.layer(c));
  return LogitField(std::move(layers));
}

MultiClassStack to_stack(const LogitField& logits) {
  std::vector<ScalarGrid> layers;
  for (int c = 0; c < logits.classes(); ++c) layers.push_back(logits.layer(c));
  return MultiClassStack(std::move(layers));
}

int run_generate(const std::string& plan_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed) {
  int item_count = 40;
  SyntheticSpec spec = dataset_from_config(parse_config_file(plan_path), &item_count);
  if (seed) spec.seed = *seed;
  if (out_dir.empty()) throw ValidationError("generate: an output directory is required");
  fs::create_directories(out_dir);

  const std::vector<DatasetItem> items = generate(spec, item_count);

  std::FILE* manifest = std::fopen((fs::path(out_dir) / "manifest.csv").string().c_str(), "w");
  if (!manifest) throw IoError("cannot write manifest.csv");
  std::fprintf(manifest,
               "id,classes,structure,true_size_px,true_size_pct,bound_lower,bound_upper,components\n");
  const double total = static_cast<double>(spec.dims.size());
  char name[64];
  for (const DatasetItem& item : items) {
    std::snprintf(name, sizeof(name), "item_%04d", item.id);
    const fs::path stem = fs::path(out_dir) / name;
    write_psg1(stem.string() + "_logits.psg1", to_stack(item.logits));
    if (item.gt.classes() == 1) {
      write_pgm(stem.string() + "_gt.pgm", item.gt.layer(0));
    } else {
      std::vector<ScalarGrid> layers;
      for (int c = 0; c < item.gt.classes(); ++c) layers.push_back(item.gt.layer(c).to_scalar());
      write_psg1(stem.string() + "_gt.psg1", MultiClassStack(std::move(layers)));
    }
    const auto fg = foreground_classes(item.gt.classes());
    for (std::size_t k = 0; k < fg.size(); ++k) {
      const int cc = connected_components(item.gt.layer(fg[k])).count;
      std::fprintf(manifest, "%d,%d,class%zu,%.0f,%.6f,%.6f,%.6f,%d\n", item.id,
                   item.gt.classes(), k + 1, item.true_size_px[k],
                   100.0 * item.true_size_px[k] / total, item.bounds[k].lower,
                   item.bounds[k].upper, cc);
    }
  }
  std::fclose(manifest);
  std::printf("wrote %zu items to %s\n", items.size(), out_dir.c_str());
  return 0;
}

int run_refine_cmd(const std::string& logits_path, const std::string& gt_path,
                   const std::string& out_dir, const std::string& loss_name,
                   const RefineConfig& base_cfg, const std::vector<double>& bounds_flat) {
  const LogitField logits = load_logits(logits_path);
  const MaskStack gt = load_gt(gt_path);
  fs::create_directories(out_dir);

  RefineConfig cfg = base_cfg;
  cfg.loss.prior = prior_from_config_name(loss_name);
  if (cfg.loss.prior == PriorKind::size) {
    if (bounds_flat.empty() || bounds_flat.size() % 2 != 0)
      throw ValidationError("refine: the size prior needs --bounds LOWER UPPER per foreground class");
    for (std::size_t i = 0; i + 1 < bounds_flat.size(); i += 2)
      cfg.loss.size_bounds.emplace_back(bounds_flat[i], bounds_flat[i + 1]);
  }

  const RefineResult res = refine(logits, gt, cfg);
  write_psg1(fs::path(out_dir) / "prediction.psg1", res.prediction);
  res.trajectory.write_csv(fs::path(out_dir) / "trajectory.csv");

  const MaskStack hard = threshold_prediction(res.prediction);
  const auto fg = foreground_classes(gt.classes());
  char name[64];
  for (std::size_t k = 0; k < fg.size(); ++k) {
    std::snprintf(name, sizeof(name), "mask_class%zu.pgm", k + 1);
    write_pgm(fs::path(out_dir) / name, hard.layer(fg[k]));
    std::printf("class%zu dice %.6f\n", k + 1, dice_score(hard.layer(fg[k]), gt.layer(fg[k])));
  }
  std::printf("final val dice %.6f over %d epochs\n", validation_dice(res.prediction, gt),
              static_cast<int>(res.trajectory.points.size()));
  return 0;
}

int run_score(const std::string& pred_path, const std::string& gt_path, double hd_percentile,
              Connectivity conn) {
  const BinaryMask pred = read_pgm(pred_path);
  const BinaryMask gt = read_pgm(gt_path);
  std::printf("dice %.6f\n", dice_score(pred, gt));
  const auto hd = hausdorff_distance(pred, gt, hd_percentile, conn);
  if (hd)
    std::printf("hausdorff %.6f\n", *hd);
  else
    std::printf("hausdorff undefined\n");
  const int cp = connected_components(pred, conn).count;
  const int cg = connected_components(gt, conn).count;
  std::printf("components pred %d gt %d abs_error %d\n", cp, cg, std::abs(cp - cg));
  return 0;
}

int run_edt(const std::string& mask_path, const std::string& out_path, bool signed_map) {
  const BinaryMask mask = read_pgm(mask_path);
  if (signed_map) {
    const SignedDistanceMap sdm = signed_distance(mask);
    write_psg1(out_path, sdm.values);
    std::printf("%s signed distance map%s\n", out_path.c_str(),
                sdm.degenerate ? " (degenerate: uniform mask, all zeros)" : "");
  } else {
    write_psg1(out_path, edt(mask).to_grid());
    std::printf("%s distance map\n", out_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prior-based segmentation loss toolkit"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset from a plan file");
  std::string gen_plan, gen_out;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--plan", gen_plan, "Plan/config file with a [dataset] section")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Override the dataset seed");

  // refine
  auto* ref = app.add_subcommand("refine", "Refine one logit field against a ground truth");
  std::string ref_logits, ref_gt, ref_out, ref_loss = "dice";
  RefineConfig ref_cfg;
  std::vector<double> ref_bounds;
  double ref_lambda_cap = ref_cfg.schedule.cap;
  ref->add_option("--logits", ref_logits, "Input logits (PSG1)")->required();
  ref->add_option("--gt", ref_gt, "Ground truth (PGM mask or PSG1 binary stack)")->required();
  ref->add_option("--out", ref_out, "Output directory")->required();
  ref->add_option("--loss", ref_loss, "Loss configuration (dice, dice+boundary, ...)");
  ref->add_option("--epochs", ref_cfg.epochs, "Epoch count");
  ref->add_option("--steps", ref_cfg.steps_per_epoch, "Gradient steps per epoch");
  ref->add_option("--lr", ref_cfg.learning_rate, "Learning rate");
  ref->add_option("--patience", ref_cfg.patience, "Plateau epochs before halving the rate");
  ref->add_option("--lambda-cap", ref_lambda_cap, "Upper bound of the mixing weight");
  ref->add_option("--skeleton-iters", ref_cfg.loss.skeleton_iters, "Soft skeleton iterations");
  ref->add_option("--bounds", ref_bounds, "Size bounds: LOWER UPPER per foreground class");
  ref->add_flag("!--boundary-raw", ref_cfg.loss.boundary_normalize,
                "Disable |domain| normalization of the boundary prior");

  // bench
  auto* ben = app.add_subcommand("bench", "Run the full benchmark protocol from a plan file");
  std::string ben_plan, ben_out, ben_losses;
  std::optional<std::uint64_t> ben_seed;
  std::optional<int> ben_runs, ben_conn, ben_threads, ben_skel;
  std::optional<double> ben_cap, ben_hdp;
  ben->add_option("--plan", ben_plan, "Plan/config file")->required();
  ben->add_option("--out", ben_out, "Output directory (overrides the plan)");
  ben->add_option("--runs", ben_runs, "Monte-Carlo run count");
  ben->add_option("--seed", ben_seed, "Dataset seed override");
  ben->add_option("--loss", ben_losses, "Comma-separated loss configurations");
  ben->add_option("--lambda-cap", ben_cap, "Upper bound of the mixing weight");
  ben->add_option("--skeleton-iters", ben_skel, "Soft skeleton iterations");
  ben->add_option("--hd-percentile", ben_hdp, "Hausdorff percentile in (0,100]");
  ben->add_option("--connectivity", ben_conn, "Component connectivity: 4 or 8");
  ben->add_option("--threads", ben_threads, "Concurrent item evaluations");

  // score
  auto* sco = app.add_subcommand("score", "Evaluation metrics for a mask pair");
  std::string sco_pred, sco_gt;
  double sco_hdp = 100.0;
  int sco_conn = 8;
  sco->add_option("--pred", sco_pred, "Predicted mask (PGM)")->required();
  sco->add_option("--gt", sco_gt, "Ground-truth mask (PGM)")->required();
  sco->add_option("--hd-percentile", sco_hdp, "Hausdorff percentile in (0,100]");
  sco->add_option("--connectivity", sco_conn, "Component connectivity: 4 or 8");

  // edt
  auto* edt_cmd = app.add_subcommand("edt", "Distance transform dump for a mask");
  std::string edt_mask, edt_out;
  bool edt_signed = false;
  edt_cmd->add_option("--mask", edt_mask, "Input mask (PGM)")->required();
  edt_cmd->add_option("--out", edt_out, "Output map (PSG1)")->required();
  edt_cmd->add_flag("--signed", edt_signed, "Signed distance (negative inside the mask)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_generate(gen_plan, gen_out, gen_seed);
    if (ref->parsed()) {
      ref_cfg.schedule.cap = ref_lambda_cap;
      return run_refine_cmd(ref_logits, ref_gt, ref_out, ref_loss, ref_cfg, ref_bounds);
    }
    if (ben->parsed()) {
      BenchPlan plan = load_bench_plan(ben_plan);
      if (!ben_out.empty()) plan.bench.out_dir = ben_out;
      if (ben_seed) plan.dataset.seed = *ben_seed;
      if (ben_runs) plan.bench.runs = *ben_runs;
      if (ben_conn) plan.bench.connectivity = parse_connectivity(*ben_conn);
      if (ben_threads) plan.bench.threads = *ben_threads;
      if (ben_hdp) plan.bench.hd_percentile = *ben_hdp;
      if (ben_cap) plan.refine.schedule.cap = *ben_cap;
      if (ben_skel) plan.refine.loss.skeleton_iters = *ben_skel;
      if (!ben_losses.empty()) {
        plan.bench.losses.clear();
        std::string token;
        for (char ch : ben_losses + ",") {
          if (ch == ',') {
            if (!token.empty()) plan.bench.losses.push_back(prior_from_config_name(token));
            token.clear();
          } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            token += ch;
          }
        }
      }
      if (plan.bench.out_dir.empty())
        throw ValidationError("bench: set `out` in [bench] or pass --out");

      const BenchResult res = run_bench(plan);
      std::printf("configs: %zu  structures: %zu  runs: %d  failures: %zu\n",
                  res.config_names.size(), res.structure_names.size(), plan.bench.runs,
                  res.failures.size());
      for (std::size_t c = 0; c < res.config_names.size(); ++c)
        for (std::size_t s = 0; s < res.structure_names.size(); ++s)
          std::printf("  %-16s %s dice %.4f +/- %.4f\n", res.config_names[c].c_str(),
                      res.structure_names[s].c_str(), res.aggregates[c][s].dsc.mean,
                      res.aggregates[c][s].dsc.stddev);
      std::printf("reports in %s\n", plan.bench.out_dir.c_str());
      return 0;
    }
    if (sco->parsed()) return run_score(sco_pred, sco_gt, sco_hdp, parse_connectivity(sco_conn));
    if (edt_cmd->parsed()) return run_edt(edt_mask, edt_out, edt_signed);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
