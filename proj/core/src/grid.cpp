#include "segprior/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace segprior {

bool ScalarGrid::all_finite() const {
  for (double x : v_)
    if (!std::isfinite(x)) return false;
  return true;
}

double ScalarGrid::min() const {
  double m = v_.empty() ? 0.0 : v_[0];
  for (double x : v_) m = std::min(m, x);
  return m;
}

double ScalarGrid::max() const {
  double m = v_.empty() ? 0.0 : v_[0];
  for (double x : v_) m = std::max(m, x);
  return m;
}

double ScalarGrid::sum() const {
  double s = 0.0;
  for (double x : v_) s += x;
  return s;
}

BinaryMask::BinaryMask(GridDomain dom, std::vector<std::uint8_t> values)
    : dom_(dom), v_(std::move(values)) {
  if (v_.size() != dom_.size()) throw ValidationError("BinaryMask: value count does not match domain");
  for (std::size_t i = 0; i < v_.size(); ++i)
    if (v_[i] > 1)
      throw ValidationError("BinaryMask: value at pixel " + std::to_string(i) + " is not 0 or 1");
}

std::size_t BinaryMask::foreground_count() const {
  std::size_t n = 0;
  for (std::uint8_t x : v_) n += x;
  return n;
}

bool BinaryMask::uniform() const {
  const std::size_t fg = foreground_count();
  return fg == 0 || fg == v_.size();
}

ScalarGrid BinaryMask::to_scalar() const {
  ScalarGrid out(dom_);
  for (std::size_t i = 0; i < v_.size(); ++i) out[i] = static_cast<double>(v_[i]);
  return out;
}

BinaryMask BinaryMask::complement() const {
  BinaryMask out(dom_);
  for (std::size_t i = 0; i < v_.size(); ++i) out[i] = static_cast<std::uint8_t>(1 - v_[i]);
  return out;
}

MultiClassStack::MultiClassStack(std::vector<ScalarGrid> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ValidationError("MultiClassStack: at least one layer required");
  dom_ = layers_[0].domain();
  for (const auto& l : layers_)
    if (l.domain() != dom_) throw ValidationError("MultiClassStack: layers must share a domain");
}

void MultiClassStack::validate_probabilities(double eps) const {
  for (std::size_t i = 0; i < dom_.size(); ++i) {
    double s = 0.0;
    for (const auto& l : layers_) s += l[i];
    if (std::abs(s - 1.0) > eps)
      throw ValidationError("MultiClassStack: class probabilities at pixel " + std::to_string(i) +
                            " sum to " + std::to_string(s));
  }
}

MaskStack::MaskStack(std::vector<BinaryMask> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ValidationError("MaskStack: at least one layer required");
  dom_ = layers_[0].domain();
  for (const auto& l : layers_)
    if (l.domain() != dom_) throw ValidationError("MaskStack: layers must share a domain");
}

MaskStack MaskStack::single(BinaryMask mask) {
  std::vector<BinaryMask> layers;
  layers.push_back(std::move(mask));
  return MaskStack(std::move(layers));
}

std::vector<int> foreground_classes(int classes) {
  if (classes < 1) throw ValidationError("foreground_classes: class count must be >= 1");
  if (classes == 1) return {0};
  std::vector<int> fg;
  for (int c = 1; c < classes; ++c) fg.push_back(c);
  return fg;
}

BinaryMask threshold(const ScalarGrid& p, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("threshold: t must lie in [0,1]");
  BinaryMask out(p.domain());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = p[i];
    if (!(x >= 0.0 && x <= 1.0))
      throw ValidationError("threshold: value at pixel " + std::to_string(i) + " (" +
                            std::to_string(x) + ") is outside [0,1]");
    out[i] = x > t ? 1 : 0;
  }
  return out;
}

ScalarGrid normalize_intensity(const ScalarGrid& img) {
  if (!img.all_finite()) throw ValidationError("normalize_intensity: input must be finite");
  const double lo = img.min();
  const double hi = img.max();
  ScalarGrid out(img.domain());
  if (hi == lo) return out;  // blank slices map to zeros
  const double inv = 1.0 / (hi - lo);
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = (img[i] - lo) * inv;
  return out;
}

namespace {

// Nearest-neighbor source index for output index i.
inline int nn_index(int i, int src, int target) {
  int s = static_cast<int>(std::floor((static_cast<double>(i) + 0.5) * src / target));
  return std::clamp(s, 0, src - 1);
}

template <typename GridT>
GridT resize_nn(const GridT& g, GridDomain target) {
  if (target.height < 1 || target.width < 1)
    throw ValidationError("resize_nearest: target dimensions must be >= 1");
  GridT out(target);
  for (int r = 0; r < target.height; ++r) {
    const int sr = nn_index(r, g.height(), target.height);
    for (int c = 0; c < target.width; ++c) {
      const int sc = nn_index(c, g.width(), target.width);
      out.at(r, c) = g.at(sr, sc);
    }
  }
  return out;
}

}  // namespace

ScalarGrid resize_nearest(const ScalarGrid& g, GridDomain target) { return resize_nn(g, target); }
BinaryMask resize_nearest(const BinaryMask& m, GridDomain target) { return resize_nn(m, target); }

void check_same_domain(const GridDomain& a, const GridDomain& b, const char* what) {
  if (!(a == b))
    throw ValidationError(std::string(what) + ": domain mismatch (" + std::to_string(a.height) + "x" +
                          std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                          std::to_string(b.width) + ")");
}

ScalarGrid add(const ScalarGrid& a, const ScalarGrid& b) {
  check_same_domain(a.domain(), b.domain(), "add");
  ScalarGrid out(a.domain());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

ScalarGrid sub(const ScalarGrid& a, const ScalarGrid& b) {
  check_same_domain(a.domain(), b.domain(), "sub");
  ScalarGrid out(a.domain());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

ScalarGrid mul(const ScalarGrid& a, const ScalarGrid& b) {
  check_same_domain(a.domain(), b.domain(), "mul");
  ScalarGrid out(a.domain());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

ScalarGrid scale(const ScalarGrid& a, double s) {
  ScalarGrid out(a.domain());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

}  // namespace segprior
