#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "segprior/error.hpp"

namespace segprior {

/// Rectangular pixel domain. Pixels are addressed as (row, col) and stored
/// row-major; this is the single canonical layout used by every module and
/// by the file formats.
struct GridDomain {
  int height = 0;
  int width = 0;

  GridDomain() = default;
  GridDomain(int h, int w) : height(h), width(w) {
    if (h < 1 || w < 1) throw ValidationError("GridDomain: height and width must be >= 1");
  }

  std::size_t size() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * width + c; }
  bool contains(int r, int c) const { return r >= 0 && r < height && c >= 0 && c < width; }

  bool operator==(const GridDomain&) const = default;
};

/// H x W field of real values; the universal carrier for images, probability
/// maps and distance maps. Values are immutable from the point of view of
/// concurrent readers: the API mutates only through non-const access held by
/// a single owner.
class ScalarGrid {
 public:
  ScalarGrid() = default;
  explicit ScalarGrid(GridDomain dom, double fill = 0.0) : dom_(dom), v_(dom.size(), fill) {}
  ScalarGrid(GridDomain dom, std::vector<double> values) : dom_(dom), v_(std::move(values)) {
    if (v_.size() != dom_.size()) throw ValidationError("ScalarGrid: value count does not match domain");
  }

  const GridDomain& domain() const { return dom_; }
  int height() const { return dom_.height; }
  int width() const { return dom_.width; }
  std::size_t size() const { return v_.size(); }

  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }
  double& at(int r, int c) { return v_[dom_.index(r, c)]; }
  double at(int r, int c) const { return v_[dom_.index(r, c)]; }

  std::span<double> values() { return v_; }
  std::span<const double> values() const { return v_; }

  bool all_finite() const;
  double min() const;
  double max() const;
  double sum() const;

 private:
  GridDomain dom_;
  std::vector<double> v_;
};

/// H x W field over {0,1}; ground truths and thresholded predictions.
class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(GridDomain dom, std::uint8_t fill = 0) : dom_(dom), v_(dom.size(), fill) {
    if (fill > 1) throw ValidationError("BinaryMask: fill value must be 0 or 1");
  }
  BinaryMask(GridDomain dom, std::vector<std::uint8_t> values);

  const GridDomain& domain() const { return dom_; }
  int height() const { return dom_.height; }
  int width() const { return dom_.width; }
  std::size_t size() const { return v_.size(); }

  std::uint8_t& operator[](std::size_t i) { return v_[i]; }
  std::uint8_t operator[](std::size_t i) const { return v_[i]; }
  std::uint8_t& at(int r, int c) { return v_[dom_.index(r, c)]; }
  std::uint8_t at(int r, int c) const { return v_[dom_.index(r, c)]; }

  std::span<std::uint8_t> values() { return v_; }
  std::span<const std::uint8_t> values() const { return v_; }

  std::size_t foreground_count() const;
  bool uniform() const;  // all zero or all one

  ScalarGrid to_scalar() const;
  BinaryMask complement() const;

 private:
  GridDomain dom_;
  std::vector<std::uint8_t> v_;
};

/// One scalar layer per class, all sharing a domain. By convention layer 0 is
/// the background class whenever the stack holds more than one layer.
class MultiClassStack {
 public:
  MultiClassStack() = default;
  MultiClassStack(GridDomain dom, int classes) : dom_(dom) {
    if (classes < 1) throw ValidationError("MultiClassStack: class count must be >= 1");
    layers_.assign(static_cast<std::size_t>(classes), ScalarGrid(dom));
  }
  explicit MultiClassStack(std::vector<ScalarGrid> layers);

  const GridDomain& domain() const { return dom_; }
  int classes() const { return static_cast<int>(layers_.size()); }
  ScalarGrid& layer(int c) { return layers_[static_cast<std::size_t>(c)]; }
  const ScalarGrid& layer(int c) const { return layers_[static_cast<std::size_t>(c)]; }

  /// Per-pixel class sums must be 1 within eps. Applies to probability stacks
  /// that include a background layer.
  void validate_probabilities(double eps = 1e-5) const;

 private:
  GridDomain dom_;
  std::vector<ScalarGrid> layers_;
};

/// One binary layer per class; the ground-truth counterpart of MultiClassStack.
class MaskStack {
 public:
  MaskStack() = default;
  explicit MaskStack(std::vector<BinaryMask> layers);
  static MaskStack single(BinaryMask mask);

  const GridDomain& domain() const { return dom_; }
  int classes() const { return static_cast<int>(layers_.size()); }
  BinaryMask& layer(int c) { return layers_[static_cast<std::size_t>(c)]; }
  const BinaryMask& layer(int c) const { return layers_[static_cast<std::size_t>(c)]; }

 private:
  GridDomain dom_;
  std::vector<BinaryMask> layers_;
};

/// Foreground class indices of a C-class stack: {0} for C == 1, else 1..C-1.
std::vector<int> foreground_classes(int classes);

// ---- Operations ----

/// Binarize at t with the strict convention: output is 1 iff value > t.
/// Values must lie in [0,1]; a violation reports the offending pixel.
BinaryMask threshold(const ScalarGrid& p, double t);

/// Affine rescale to [0,1]; a constant grid maps to all zeros.
ScalarGrid normalize_intensity(const ScalarGrid& img);

/// Nearest-neighbor resampling; source index = floor((i + 0.5) * src / target).
ScalarGrid resize_nearest(const ScalarGrid& g, GridDomain target);
BinaryMask resize_nearest(const BinaryMask& m, GridDomain target);

// ---- Small arithmetic helpers shared across modules ----

void check_same_domain(const GridDomain& a, const GridDomain& b, const char* what);

ScalarGrid add(const ScalarGrid& a, const ScalarGrid& b);
ScalarGrid sub(const ScalarGrid& a, const ScalarGrid& b);
ScalarGrid mul(const ScalarGrid& a, const ScalarGrid& b);
ScalarGrid scale(const ScalarGrid& a, double s);

}  // namespace segprior
