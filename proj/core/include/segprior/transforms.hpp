#pragma once

#include <cstdint>
#include <vector>

#include "segprior/grid.hpp"

namespace segprior {

enum class Connectivity : int { four = 4, eight = 8 };

/// Per-pixel Euclidean distance to the nearest source pixel. Squared values
/// are exact integers (pixel-center metric) and are kept alongside the
/// rounded distances so that exactness can be checked without tolerance.
class DistanceMap {
 public:
  DistanceMap() = default;
  DistanceMap(GridDomain dom, std::vector<std::int64_t> squared);

  const GridDomain& domain() const { return dom_; }
  double at(int r, int c) const { return dist_[dom_.index(r, c)]; }
  double operator[](std::size_t i) const { return dist_[i]; }
  std::span<const double> values() const { return dist_; }
  std::span<const std::int64_t> squared() const { return sq_; }

  ScalarGrid to_grid() const { return ScalarGrid(dom_, {dist_.begin(), dist_.end()}); }

 private:
  GridDomain dom_;
  std::vector<std::int64_t> sq_;
  std::vector<double> dist_;
};

/// Distance to the opposite class, negated on foreground pixels. `degenerate`
/// marks maps built from a uniform mask, which carry the all-zeros convention
/// so that downstream losses contribute nothing instead of crashing.
struct SignedDistanceMap {
  ScalarGrid values;
  bool degenerate = false;
};

struct ComponentLabeling {
  GridDomain domain;
  std::vector<int> labels;  // 0 = background, components numbered 1..count
  int count = 0;
};

/// Exact Euclidean distance transform of the source set.
///
/// Two separable passes: per-column nearest-source offsets, then a per-row
/// lower envelope of parabolas over the squared column distances. All
/// arithmetic on squared distances is integer-valued, so results are exact.
/// Throws EmptySourceError when the mask has no foreground pixel.
DistanceMap edt(const BinaryMask& source);

/// +edt(foreground) on background pixels, -edt(background) on foreground
/// pixels. Uniform masks yield the all-zeros map with `degenerate` set.
SignedDistanceMap signed_distance(const BinaryMask& mask);

/// |signed_distance|: distance to the nearest opposite-class pixel, zeros for
/// uniform masks.
ScalarGrid opposite_class_distance(const BinaryMask& mask);

/// Deterministic labeling: components are numbered by their first pixel in
/// row-major order.
ComponentLabeling connected_components(const BinaryMask& mask, Connectivity conn = Connectivity::eight);

/// Foreground pixels with at least one background neighbor under the given
/// connectivity; the image border counts as background.
BinaryMask boundary_pixels(const BinaryMask& mask, Connectivity conn = Connectivity::eight);

// 3x3 soft-morphology kernels. Erosion pads with 0 outside the grid (the
// border is background); dilation uses replicate padding so both stay inside
// the image. These are the forward kernels of the tape's pooling ops and must
// stay in sync with its gradient routing.
ScalarGrid min_filter3(const ScalarGrid& g);
ScalarGrid max_filter3(const ScalarGrid& g);
ScalarGrid relu(const ScalarGrid& g);

/// Iterated soft skeletonization.
///
/// With erode = min_filter3 and open = max_filter3(min_filter3(.)), the
/// skeleton starts from the opening residue relu(img - open(img)) and
/// accumulates the residue of each of the k successive erosions through a
/// soft union, which keeps values in [0,1]:
///   skel <- skel + relu(delta - skel * delta).
/// Composed purely of tape-differentiable primitives.
ScalarGrid soft_skeleton(const ScalarGrid& p, int iterations);

}  // namespace segprior
