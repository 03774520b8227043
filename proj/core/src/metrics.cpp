#include "segprior/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace segprior {

double dice_score(const BinaryMask& pred, const BinaryMask& gt) {
  check_same_domain(pred.domain(), gt.domain(), "dice_score");
  std::size_t inter = 0, np = 0, ng = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += pred[i] & gt[i];
    np += pred[i];
    ng += gt[i];
  }
  if (np + ng == 0) return 1.0;  // two empty masks agree perfectly
  return 2.0 * static_cast<double>(inter) / static_cast<double>(np + ng);
}

namespace {

// Directed percentile distance: for every boundary pixel of `from`, the exact
// min squared distance to the boundary of `to` (via the EDT of that boundary),
// then the nearest-rank percentile of the sorted list.
std::int64_t directed_sq(const BinaryMask& from_boundary, const DistanceMap& to_boundary_edt,
                         double percentile) {
  std::vector<std::int64_t> d;
  for (std::size_t i = 0; i < from_boundary.size(); ++i)
    if (from_boundary[i]) d.push_back(to_boundary_edt.squared()[i]);
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return d[rank - 1];
}

}  // namespace

std::optional<double> hausdorff_distance(const BinaryMask& pred, const BinaryMask& gt,
                                         double percentile, Connectivity conn) {
  check_same_domain(pred.domain(), gt.domain(), "hausdorff_distance");
  if (!(percentile > 0.0 && percentile <= 100.0))
    throw ValidationError("hausdorff_distance: percentile must lie in (0, 100]");
  if (pred.foreground_count() == 0 || gt.foreground_count() == 0) return std::nullopt;

  const BinaryMask bp = boundary_pixels(pred, conn);
  const BinaryMask bg = boundary_pixels(gt, conn);
  const DistanceMap to_bp = edt(bp);
  const DistanceMap to_bg = edt(bg);
  const std::int64_t sq =
      std::max(directed_sq(bp, to_bg, percentile), directed_sq(bg, to_bp, percentile));
  return std::sqrt(static_cast<double>(sq));
}

double cc_abs_error(const BinaryMask& pred, const BinaryMask& gt, Connectivity conn) {
  check_same_domain(pred.domain(), gt.domain(), "cc_abs_error");
  const int cp = connected_components(pred, conn).count;
  const int cg = connected_components(gt, conn).count;
  return std::abs(cp - cg);
}

double cc_mae(const std::vector<std::pair<BinaryMask, BinaryMask>>& pairs, Connectivity conn) {
  if (pairs.empty()) throw ValidationError("cc_mae: at least one mask pair required");
  double acc = 0.0;
  for (const auto& [pred, gt] : pairs) acc += cc_abs_error(pred, gt, conn);
  return acc / static_cast<double>(pairs.size());
}

namespace {

AggregateStats mean_and_popstd(const std::vector<double>& xs) {
  AggregateStats s;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) s.mean += x;
  s.mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / n);
  return s;
}

}  // namespace

AggregateRecord aggregate(const std::vector<std::vector<MetricRecord>>& runs) {
  if (runs.empty()) throw ValidationError("aggregate: at least one run required");
  AggregateRecord out;
  out.run_count = static_cast<int>(runs.size());

  std::vector<double> dsc_means, cc_means, hd_means;
  for (const auto& run : runs) {
    if (run.empty()) throw ValidationError("aggregate: empty run");
    double dsc = 0.0, cc = 0.0, hd = 0.0;
    int hd_n = 0;
    for (const MetricRecord& r : run) {
      dsc += r.dsc;
      cc += r.cc_error;
      if (r.hd) {
        hd += *r.hd;
        ++hd_n;
      } else {
        ++out.hd_excluded_records;
      }
    }
    const double n = static_cast<double>(run.size());
    dsc_means.push_back(dsc / n);
    cc_means.push_back(cc / n);
    if (hd_n > 0) {
      hd_means.push_back(hd / static_cast<double>(hd_n));
      ++out.hd_runs_used;
    }
  }

  out.dsc = mean_and_popstd(dsc_means);
  out.cc = mean_and_popstd(cc_means);
  if (!hd_means.empty()) out.hd = mean_and_popstd(hd_means);
  return out;
}

}  // namespace segprior
