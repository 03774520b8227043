#include "segprior/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <thread>

#include "segprior/rng.hpp"

namespace segprior {

void BenchSettings::validate() const {
  if (runs < 1) throw ValidationError("BenchSettings: at least one run required");
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw ValidationError("BenchSettings: split fraction must lie in (0,1)");
  if (losses.empty()) throw ValidationError("BenchSettings: at least one loss configuration required");
  if (!(hd_percentile > 0.0 && hd_percentile <= 100.0))
    throw ValidationError("BenchSettings: hd percentile must lie in (0,100]");
  if (threads < 1) throw ValidationError("BenchSettings: thread count must be >= 1");
  if (!(bound_slack >= 0.0 && bound_slack < 1.0))
    throw ValidationError("BenchSettings: bound slack must lie in [0,1)");
}

SplitResult split_indices(int item_count, double fraction, std::uint64_t run_seed) {
  if (item_count < 2) throw ValidationError("split: at least two items required");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ValidationError("split: fraction must lie in (0,1)");

  std::vector<int> order(static_cast<std::size_t>(item_count));
  for (int i = 0; i < item_count; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(run_seed);
  for (int i = item_count - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(rng.uniform_int(0, i))]);

  int n_train = static_cast<int>(std::lround(fraction * item_count));
  n_train = std::clamp(n_train, 1, item_count - 1);

  SplitResult out;
  out.train.assign(order.begin(), order.begin() + n_train);
  out.val.assign(order.begin() + n_train, order.end());
  return out;
}

SplitResult split(const std::vector<DatasetItem>& items, double fraction, std::uint64_t run_seed) {
  return split_indices(static_cast<int>(items.size()), fraction, run_seed);
}

int BenchResult::config_index(const std::string& name) const {
  for (std::size_t i = 0; i < config_names.size(); ++i)
    if (config_names[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

// Deterministic work distribution: results land in caller-owned slots indexed
// by item, so thread count never changes output bytes.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  const int workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

struct ItemOutcome {
  bool ok = false;
  std::string error;
  std::vector<MetricRecord> per_structure;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct CellCmp {
  // '+' improvement over baseline, '-' degradation, '=' tie, "" not applicable
  static std::string compare(std::optional<double> value, std::optional<double> base,
                             bool higher_is_better) {
    if (!value || !base) return "";
    if (*value == *base) return "=";
    const bool better = higher_is_better ? *value > *base : *value < *base;
    return better ? "+" : "-";
  }
};

class ReportWriter {
 public:
  ReportWriter(const BenchResult& result, const std::filesystem::path& dir)
      : res_(result), dir_(dir) {}

  void write_metric_table(const std::string& stem, const std::string& metric_label,
                          bool higher_is_better,
                          const std::function<std::optional<AggregateStats>(const AggregateRecord&)>&
                              pick,
                          const std::function<int(const AggregateRecord&)>& excluded) const {
    const int base_cfg = res_.config_index("dice");

    // CSV
    std::ofstream csv(dir_ / (stem + ".csv"), std::ios::trunc);
    csv << "structure";
    for (const auto& name : res_.config_names)
      csv << "," << name << " mean," << name << " std," << name << " cmp," << name << " excluded";
    csv << "\n";
    for (std::size_t s = 0; s < res_.structure_names.size(); ++s) {
      csv << res_.structure_names[s];
      const std::optional<AggregateStats> base =
          base_cfg >= 0 ? pick(res_.aggregates[static_cast<std::size_t>(base_cfg)][s]) : std::nullopt;
      for (std::size_t c = 0; c < res_.config_names.size(); ++c) {
        const AggregateRecord& rec = res_.aggregates[c][s];
        const std::optional<AggregateStats> stats = pick(rec);
        csv << ",";
        if (stats) csv << fmt(stats->mean);
        csv << ",";
        if (stats) csv << fmt(stats->stddev);
        csv << ",";
        if (static_cast<int>(c) != base_cfg)
          csv << CellCmp::compare(stats ? std::optional<double>(stats->mean) : std::nullopt,
                                  base ? std::optional<double>(base->mean) : std::nullopt,
                                  higher_is_better);
        csv << "," << excluded(rec);
      }
      csv << "\n";
    }

    // Aligned text table
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header{"structure"};
    for (const auto& name : res_.config_names) header.push_back(name);
    cells.push_back(header);
    for (std::size_t s = 0; s < res_.structure_names.size(); ++s) {
      std::vector<std::string> row{res_.structure_names[s]};
      const std::optional<AggregateStats> base =
          base_cfg >= 0 ? pick(res_.aggregates[static_cast<std::size_t>(base_cfg)][s]) : std::nullopt;
      for (std::size_t c = 0; c < res_.config_names.size(); ++c) {
        const AggregateRecord& rec = res_.aggregates[c][s];
        const std::optional<AggregateStats> stats = pick(rec);
        std::string cell;
        if (!stats) {
          cell = "undefined";
        } else {
          cell = fmt(stats->mean) + " +/- " + fmt(stats->stddev);
          const int ex = excluded(rec);
          if (ex > 0) cell += " (excl " + std::to_string(ex) + ")";
        }
        if (static_cast<int>(c) != base_cfg) {
          const std::string cmp =
              CellCmp::compare(stats ? std::optional<double>(stats->mean) : std::nullopt,
                               base ? std::optional<double>(base->mean) : std::nullopt,
                               higher_is_better);
          if (!cmp.empty()) cell += " (" + cmp + ")";
        }
        row.push_back(cell);
      }
      cells.push_back(row);
    }

    std::vector<std::size_t> widths(cells[0].size(), 0);
    for (const auto& row : cells)
      for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());

    std::ofstream txt(dir_ / (stem + ".txt"), std::ios::trunc);
    txt << metric_label << " (mean +/- std over " << res_.aggregates[0][0].run_count
        << " Monte-Carlo runs; '+' beats the dice baseline, '-' trails it)\n\n";
    for (const auto& row : cells) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        txt << row[i];
        if (i + 1 < row.size()) txt << std::string(widths[i] - row[i].size() + 2, ' ');
      }
      txt << "\n";
    }
  }

 private:
  const BenchResult& res_;
  std::filesystem::path dir_;
};

void write_reports(const BenchResult& res, const BenchPlan& plan,
                   const std::vector<SplitResult>& splits,
                   const std::vector<std::vector<std::vector<std::vector<double>>>>& scatter_dsc,
                   const std::vector<DatasetItem>& items) {
  const std::filesystem::path dir(plan.bench.out_dir);
  std::filesystem::create_directories(dir);

  ReportWriter writer(res, dir);
  writer.write_metric_table(
      "report_dsc", "Dice score", true,
      [](const AggregateRecord& r) { return std::optional<AggregateStats>(r.dsc); },
      [](const AggregateRecord&) { return 0; });
  writer.write_metric_table(
      "report_hd", "Hausdorff distance (pixels)", false,
      [](const AggregateRecord& r) { return r.hd; },
      [](const AggregateRecord& r) { return r.hd_excluded_records; });
  writer.write_metric_table(
      "report_cc_mae", "Connected-component count MAE", false,
      [](const AggregateRecord& r) { return std::optional<AggregateStats>(r.cc); },
      [](const AggregateRecord&) { return 0; });

  {
    std::ofstream out(dir / "per_run_means.csv", std::ios::trunc);
    out << "config,run,structure,dsc_mean,hd_mean,hd_excluded,cc_mean,items\n";
    for (std::size_t c = 0; c < res.config_names.size(); ++c)
      for (std::size_t r = 0; r < res.run_stats[c].size(); ++r)
        for (std::size_t s = 0; s < res.run_stats[c][r].size(); ++s) {
          const RunStats& st = res.run_stats[c][r][s];
          out << res.config_names[c] << "," << r << "," << res.structure_names[s] << ","
              << fmt(st.dsc_mean) << "," << (st.hd_mean ? fmt(*st.hd_mean) : std::string()) << ","
              << st.hd_excluded << "," << fmt(st.cc_mean) << "," << st.items << "\n";
        }
  }

  {
    std::ofstream out(dir / "scatter_size_dice.csv", std::ios::trunc);
    out << "config,run,item,structure,true_size_pct,dice\n";
    const double total = static_cast<double>(plan.dataset.dims.size());
    for (std::size_t c = 0; c < res.config_names.size(); ++c)
      for (std::size_t r = 0; r < scatter_dsc[c].size(); ++r)
        for (std::size_t v = 0; v < scatter_dsc[c][r].size(); ++v) {
          const int item_id = splits[r].val[v];
          const DatasetItem& item = items[static_cast<std::size_t>(item_id)];
          for (std::size_t s = 0; s < scatter_dsc[c][r][v].size(); ++s) {
            if (std::isnan(scatter_dsc[c][r][v][s])) continue;  // failed item
            out << res.config_names[c] << "," << r << "," << item_id << ","
                << res.structure_names[s] << "," << fmt(100.0 * item.true_size_px[s] / total) << ","
                << fmt(scatter_dsc[c][r][v][s]) << "\n";
          }
        }
  }

  {
    std::ofstream out(dir / "splits.csv", std::ios::trunc);
    out << "run,item,role\n";
    for (std::size_t r = 0; r < splits.size(); ++r) {
      for (int i : splits[r].train) out << r << "," << i << ",train\n";
      for (int i : splits[r].val) out << r << "," << i << ",val\n";
    }
  }

  {
    std::ofstream out(dir / "failures.csv", std::ios::trunc);
    out << "config,run,item,message\n";
    for (const BenchFailure& f : res.failures)
      out << f.config << "," << f.run << "," << f.item << ",\"" << f.message << "\"\n";
  }
}

}  // namespace

BenchResult run_bench(const BenchPlan& plan) {
  plan.bench.validate();
  plan.refine.validate();

  const std::vector<DatasetItem> items = generate(plan.dataset, plan.item_count);

  // Per-class size bands: tight around each item's true size, or one loose
  // dataset-wide band shared by every item.
  std::vector<std::vector<SizeBounds>> item_bounds;
  if (plan.bench.bounds_mode == BoundsMode::per_item) {
    for (const DatasetItem& it : items) item_bounds.push_back(per_item_bounds(it, plan.bench.bound_slack));
  } else {
    const std::vector<SizeBounds> wide = dataset_wide_bounds(items);
    item_bounds.assign(items.size(), wide);
  }

  const auto fg = foreground_classes(plan.dataset.classes());

  BenchResult res;
  for (PriorKind kind : plan.bench.losses) res.config_names.push_back(prior_config_name(kind));
  for (std::size_t k = 0; k < fg.size(); ++k)
    res.structure_names.push_back("class" + std::to_string(k + 1));

  std::vector<SplitResult> splits;
  for (int r = 0; r < plan.bench.runs; ++r)
    splits.push_back(split(items, plan.bench.split_fraction,
                           Rng::derive(plan.dataset.seed, 0xBE5Cull + static_cast<std::uint64_t>(r))));

  // scatter_dsc[config][run][val index][structure]; NaN marks failed items
  std::vector<std::vector<std::vector<std::vector<double>>>> scatter_dsc(
      res.config_names.size());

  res.run_stats.assign(res.config_names.size(), {});
  res.aggregates.assign(res.config_names.size(), {});

  for (std::size_t c = 0; c < plan.bench.losses.size(); ++c) {
    const PriorKind kind = plan.bench.losses[c];
    // records[run][structure][item-in-run]
    std::vector<std::vector<std::vector<MetricRecord>>> records(
        static_cast<std::size_t>(plan.bench.runs),
        std::vector<std::vector<MetricRecord>>(fg.size()));
    scatter_dsc[c].resize(static_cast<std::size_t>(plan.bench.runs));

    for (int r = 0; r < plan.bench.runs; ++r) {
      const std::vector<int>& val = splits[static_cast<std::size_t>(r)].val;
      std::vector<ItemOutcome> outcomes(val.size());

      parallel_for(static_cast<int>(val.size()), plan.bench.threads, [&](int vi) {
        const DatasetItem& item = items[static_cast<std::size_t>(val[static_cast<std::size_t>(vi)])];
        ItemOutcome& out = outcomes[static_cast<std::size_t>(vi)];
        try {
          RefineConfig cfg = plan.refine;
          cfg.loss.prior = kind;
          cfg.loss.size_bounds = item_bounds[static_cast<std::size_t>(item.id)];
          const RefineResult rr = refine(item.logits, item.gt, cfg);
          const MaskStack hard = threshold_prediction(rr.prediction);
          for (std::size_t k = 0; k < fg.size(); ++k) {
            const BinaryMask& pred_mask = hard.layer(fg[k]);
            const BinaryMask& gt_mask = item.gt.layer(fg[k]);
            MetricRecord rec;
            rec.dsc = dice_score(pred_mask, gt_mask);
            rec.hd = hausdorff_distance(pred_mask, gt_mask, plan.bench.hd_percentile,
                                        plan.bench.connectivity);
            rec.cc_error = cc_abs_error(pred_mask, gt_mask, plan.bench.connectivity);
            out.per_structure.push_back(rec);
          }
          out.ok = true;
        } catch (const Error& e) {
          out.ok = false;
          out.error = e.what();
        }
      });

      auto& scatter_run = scatter_dsc[c][static_cast<std::size_t>(r)];
      for (std::size_t vi = 0; vi < val.size(); ++vi) {
        const ItemOutcome& out = outcomes[vi];
        std::vector<double> row(fg.size(), std::nan(""));
        if (out.ok) {
          for (std::size_t k = 0; k < fg.size(); ++k) {
            records[static_cast<std::size_t>(r)][k].push_back(out.per_structure[k]);
            row[k] = out.per_structure[k].dsc;
          }
        } else {
          res.failures.push_back({res.config_names[c], r, val[vi], out.error});
        }
        scatter_run.push_back(std::move(row));
      }
    }

    // Per-run means and cross-run aggregates, structure by structure.
    res.run_stats[c].assign(static_cast<std::size_t>(plan.bench.runs),
                            std::vector<RunStats>(fg.size()));
    for (std::size_t k = 0; k < fg.size(); ++k) {
      std::vector<std::vector<MetricRecord>> runs_for_structure;
      for (int r = 0; r < plan.bench.runs; ++r) {
        const auto& recs = records[static_cast<std::size_t>(r)][k];
        RunStats st;
        st.items = static_cast<int>(recs.size());
        double dsc = 0.0, cc = 0.0, hd = 0.0;
        int hd_n = 0;
        for (const MetricRecord& rec : recs) {
          dsc += rec.dsc;
          cc += rec.cc_error;
          if (rec.hd) {
            hd += *rec.hd;
            ++hd_n;
          } else {
            ++st.hd_excluded;
          }
        }
        if (!recs.empty()) {
          st.dsc_mean = dsc / static_cast<double>(recs.size());
          st.cc_mean = cc / static_cast<double>(recs.size());
          if (hd_n > 0) st.hd_mean = hd / static_cast<double>(hd_n);
          runs_for_structure.push_back(recs);
        }
        res.run_stats[c][static_cast<std::size_t>(r)][k] = st;
      }
      res.aggregates[c].push_back(runs_for_structure.empty() ? AggregateRecord{}
                                                             : aggregate(runs_for_structure));
    }
  }

  if (!plan.bench.out_dir.empty()) write_reports(res, plan, splits, scatter_dsc, items);
  return res;
}

std::string bounds_mode_name(BoundsMode mode) {
  return mode == BoundsMode::per_item ? "per_item" : "dataset_wide";
}

BoundsMode bounds_mode_from_name(const std::string& name) {
  if (name == "per_item") return BoundsMode::per_item;
  if (name == "dataset_wide") return BoundsMode::dataset_wide;
  throw ValidationError("unknown bounds mode '" + name + "' (expected per_item or dataset_wide)");
}

namespace {

std::vector<PriorKind> parse_loss_list(const std::string& value) {
  std::vector<PriorKind> out;
  std::string token;
  auto flush = [&]() {
    std::size_t b = token.find_first_not_of(" \t");
    std::size_t e = token.find_last_not_of(" \t");
    if (b == std::string::npos) throw ValidationError("losses: empty entry in list");
    out.push_back(prior_from_config_name(token.substr(b, e - b + 1)));
    token.clear();
  };
  for (char ch : value) {
    if (ch == ',')
      flush();
    else
      token += ch;
  }
  flush();
  return out;
}

}  // namespace

SyntheticSpec dataset_from_config(const ConfigData& cfg, int* item_count) {
  SyntheticSpec spec;
  bool seen = false;
  for (const ConfigSection& sec : cfg) {
    if (sec.name != "dataset") continue;
    seen = true;
    for (const auto& [key, value] : sec.entries) {
      if (key == "family") spec.family = family_from_name(value);
      else if (key == "height") spec.dims.height = config_int(key, value);
      else if (key == "width") spec.dims.width = config_int(key, value);
      else if (key == "items") { if (item_count) *item_count = config_int(key, value); }
      else if (key == "instances_min") spec.instances_min = config_int(key, value);
      else if (key == "instances_max") spec.instances_max = config_int(key, value);
      else if (key == "size_min_pct") spec.size_min_pct = config_double(key, value);
      else if (key == "size_max_pct") spec.size_max_pct = config_double(key, value);
      else if (key == "noise") spec.noise = config_double(key, value);
      else if (key == "perturbation") spec.perturbation = config_double(key, value);
      else if (key == "seed") spec.seed = config_u64(key, value);
      else throw ValidationError("unknown key '" + key + "' in [dataset]");
    }
  }
  if (!seen) throw ValidationError("plan file: missing [dataset] section");
  return spec;
}

BenchPlan bench_plan_from_config(const ConfigData& cfg) {
  BenchPlan plan;
  plan.dataset = dataset_from_config(cfg, &plan.item_count);

  for (const ConfigSection& sec : cfg) {
    if (sec.name == "dataset") continue;
    if (sec.name == "bench") {
      for (const auto& [key, value] : sec.entries) {
        if (key == "runs") plan.bench.runs = config_int(key, value);
        else if (key == "split") plan.bench.split_fraction = config_double(key, value);
        else if (key == "losses") plan.bench.losses = parse_loss_list(value);
        else if (key == "bounds_mode") plan.bench.bounds_mode = bounds_mode_from_name(value);
        else if (key == "bound_slack") plan.bench.bound_slack = config_double(key, value);
        else if (key == "connectivity") {
          const int v = config_int(key, value);
          if (v != 4 && v != 8) throw ValidationError("connectivity must be 4 or 8");
          plan.bench.connectivity = v == 4 ? Connectivity::four : Connectivity::eight;
        } else if (key == "hd_percentile") plan.bench.hd_percentile = config_double(key, value);
        else if (key == "threads") plan.bench.threads = config_int(key, value);
        else if (key == "out") plan.bench.out_dir = value;
        else throw ValidationError("unknown key '" + key + "' in [bench]");
      }
    } else if (sec.name == "refine") {
      for (const auto& [key, value] : sec.entries) {
        if (key == "epochs") plan.refine.epochs = config_int(key, value);
        else if (key == "steps_per_epoch") plan.refine.steps_per_epoch = config_int(key, value);
        else if (key == "learning_rate") plan.refine.learning_rate = config_double(key, value);
        else if (key == "patience") plan.refine.patience = config_int(key, value);
        else if (key == "lr_factor") plan.refine.lr_factor = config_double(key, value);
        else if (key == "improve_tol") plan.refine.improve_tol = config_double(key, value);
        else if (key == "lambda0") plan.refine.schedule.initial = config_double(key, value);
        else if (key == "lambda_step") plan.refine.schedule.step = config_double(key, value);
        else if (key == "lambda_cap") plan.refine.schedule.cap = config_double(key, value);
        else if (key == "skeleton_iters") plan.refine.loss.skeleton_iters = config_int(key, value);
        else if (key == "boundary_normalize") plan.refine.loss.boundary_normalize = config_bool(key, value);
        else if (key == "seed") plan.refine.seed = config_u64(key, value);
        else throw ValidationError("unknown key '" + key + "' in [refine]");
      }
    } else {
      throw ValidationError("unknown section [" + sec.name + "] in plan file");
    }
  }
  return plan;
}

BenchPlan load_bench_plan(const std::filesystem::path& path) {
  return bench_plan_from_config(parse_config_file(path));
}

}  // namespace segprior
