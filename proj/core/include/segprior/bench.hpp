#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "segprior/config.hpp"
#include "segprior/metrics.hpp"
#include "segprior/refiner.hpp"
#include "segprior/synth.hpp"

namespace segprior {

enum class BoundsMode { per_item, dataset_wide };

struct BenchSettings {
  int runs = 3;
  double split_fraction = 0.8;
  std::vector<PriorKind> losses = {PriorKind::none};
  BoundsMode bounds_mode = BoundsMode::per_item;
  double bound_slack = 0.1;  // per-item band half-width, fraction of true size
  Connectivity connectivity = Connectivity::eight;
  double hd_percentile = 100.0;
  int threads = 1;
  std::string out_dir;  // empty: compute without writing reports

  void validate() const;
};

struct BenchPlan {
  SyntheticSpec dataset;
  int item_count = 40;
  BenchSettings bench;
  RefineConfig refine;
};

struct SplitResult {
  std::vector<int> train;
  std::vector<int> val;
};

/// Seeded shuffle then partition; train and val are disjoint, their union is
/// 0..n-1, and different run seeds give different partitions.
SplitResult split_indices(int item_count, double fraction, std::uint64_t run_seed);
SplitResult split(const std::vector<DatasetItem>& items, double fraction, std::uint64_t run_seed);

/// Per-structure summary of one Monte-Carlo run under one loss configuration.
struct RunStats {
  double dsc_mean = 0.0;
  std::optional<double> hd_mean;
  int hd_excluded = 0;
  double cc_mean = 0.0;
  int items = 0;
};

struct BenchFailure {
  std::string config;
  int run = 0;
  int item = 0;
  std::string message;
};

struct BenchResult {
  std::vector<std::string> config_names;
  std::vector<std::string> structure_names;
  std::vector<std::vector<AggregateRecord>> aggregates;       // [config][structure]
  std::vector<std::vector<std::vector<RunStats>>> run_stats;  // [config][run][structure]
  std::vector<BenchFailure> failures;

  int config_index(const std::string& name) const;
};

/// Full protocol: generate, Monte-Carlo split, refine every validation item
/// under every loss configuration, aggregate, and (when an output directory is
/// set) emit the CSV + aligned-text reports, the size/Dice scatter data and
/// the failure summary. Byte-identical outputs for identical plans.
BenchResult run_bench(const BenchPlan& plan);

// Plan files (see README for the key list; unknown keys are errors).
BenchPlan bench_plan_from_config(const ConfigData& cfg);
BenchPlan load_bench_plan(const std::filesystem::path& path);
SyntheticSpec dataset_from_config(const ConfigData& cfg, int* item_count = nullptr);

std::string bounds_mode_name(BoundsMode mode);
BoundsMode bounds_mode_from_name(const std::string& name);

}  // namespace segprior
