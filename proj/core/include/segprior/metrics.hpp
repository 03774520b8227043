#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "segprior/grid.hpp"
#include "segprior/transforms.hpp"

namespace segprior {

/// Per-item evaluation scores. `hd` is absent when either mask is empty and
/// no boundary distance is defined.
struct MetricRecord {
  double dsc = 0.0;
  std::optional<double> hd;
  double cc_error = 0.0;
};

struct AggregateStats {
  double mean = 0.0;
  double stddev = 0.0;  // population std over run means
};

/// Mean +/- std across Monte-Carlo runs, computed on per-run means.
struct AggregateRecord {
  AggregateStats dsc;
  AggregateStats cc;
  std::optional<AggregateStats> hd;  // absent when every run had only undefined HDs
  int hd_runs_used = 0;
  int hd_excluded_records = 0;  // undefined HD records dropped before averaging
  int run_count = 0;
};

/// 2|P and G| / (|P| + |G|); 1.0 when both masks are empty.
double dice_score(const BinaryMask& pred, const BinaryMask& gt);

/// Symmetric boundary-to-boundary Hausdorff distance in pixel units.
/// `percentile` in (0, 100] selects the nearest-rank percentile of each
/// directed min-distance list (100 = classic max). Empty masks yield nullopt.
std::optional<double> hausdorff_distance(const BinaryMask& pred, const BinaryMask& gt,
                                         double percentile = 100.0,
                                         Connectivity conn = Connectivity::eight);

/// |components(pred) - components(gt)| for one pair.
double cc_abs_error(const BinaryMask& pred, const BinaryMask& gt,
                    Connectivity conn = Connectivity::eight);

/// Mean absolute component-count error over mask pairs (pred, gt).
double cc_mae(const std::vector<std::pair<BinaryMask, BinaryMask>>& pairs,
              Connectivity conn = Connectivity::eight);

/// Aggregates one run's records into run means first, then mean +/- population
/// std across runs. Undefined HDs are excluded and counted.
AggregateRecord aggregate(const std::vector<std::vector<MetricRecord>>& runs);

}  // namespace segprior
