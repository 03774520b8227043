#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "segprior/grid.hpp"
#include "segprior/losses.hpp"
#include "segprior/refiner.hpp"

namespace segprior {

/// Shape archetypes covering the benchmark's task taxonomy: compact organs
/// (one or a few instances), scattered small lesions, ring-shaped tissue,
/// thin curvilinear structures, and a pair of adjacent tissues as the
/// multi-class case.
enum class Family { blob, multi_lesion, annulus, vessel, two_tissue };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

struct SyntheticSpec {
  Family family = Family::blob;
  GridDomain dims{64, 64};
  int instances_min = 1;  // applies to blob, multi_lesion and vessel
  int instances_max = 1;
  double size_min_pct = 2.0;  // per-class foreground occupancy, percent of pixels
  double size_max_pct = 8.0;
  double noise = 1.0;         // logit noise sigma
  double perturbation = 1.0;  // strength of mask-level corruption
  std::uint64_t seed = 0;

  int classes() const { return family == Family::two_tissue ? 3 : 1; }
  void validate() const;
};

/// One benchmark item: perturbed input logits, clean ground truth, and the
/// per-class permissible size band derived from the unperturbed truth.
struct DatasetItem {
  int id = 0;
  LogitField logits;
  MaskStack gt;
  std::vector<SizeBounds> bounds;    // one per foreground class
  std::vector<double> true_size_px;  // one per foreground class
};

/// Deterministic in `spec.seed`; every item's ground truth satisfies the
/// spec's size and instance ranges. Throws GenerationError when a spec cannot
/// be realized after bounded retries.
std::vector<DatasetItem> generate(const SyntheticSpec& spec, int n);

/// Per-item bounds: [slack_down * A, slack_up * A] around the true size.
std::vector<SizeBounds> per_item_bounds(const DatasetItem& item, double slack = 0.1);

/// Dataset-wide bounds: [min A, max A] over all items, per foreground class.
std::vector<SizeBounds> dataset_wide_bounds(const std::vector<DatasetItem>& items);

}  // namespace segprior
