#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "segprior/grid.hpp"
#include "segprior/losses.hpp"

namespace segprior {

/// Real-valued logits, one layer per class. Predictions come out through a
/// logistic transform (one class) or a per-pixel softmax (several classes).
class LogitField {
 public:
  LogitField() = default;
  LogitField(GridDomain dom, int classes) : dom_(dom) {
    if (classes < 1) throw ValidationError("LogitField: class count must be >= 1");
    layers_.assign(static_cast<std::size_t>(classes), ScalarGrid(dom));
  }
  explicit LogitField(std::vector<ScalarGrid> layers);

  const GridDomain& domain() const { return dom_; }
  int classes() const { return static_cast<int>(layers_.size()); }
  ScalarGrid& layer(int c) { return layers_[static_cast<std::size_t>(c)]; }
  const ScalarGrid& layer(int c) const { return layers_[static_cast<std::size_t>(c)]; }

 private:
  GridDomain dom_;
  std::vector<ScalarGrid> layers_;
};

/// Logistic (C == 1) or softmax (C > 1) transform of the logits.
MultiClassStack predict(const LogitField& logits);

/// Chain rule through the logistic: grad_logit = grad_pred * p * (1 - p).
ScalarGrid logistic_chain(const ScalarGrid& grad_pred, const ScalarGrid& pred);

/// Chain rule through the per-pixel softmax Jacobian.
MultiClassStack softmax_chain(const MultiClassStack& grad_pred, const MultiClassStack& pred);

struct TrajectoryPoint {
  int epoch = 0;
  double lambda = 0.0;
  double loss = 0.0;      // composite value of the last step of the epoch
  double val_dice = 0.0;  // thresholded Dice against the ground truth
  double learning_rate = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  void write_csv(const std::filesystem::path& path) const;
};

struct RefineConfig {
  int epochs = 200;
  int steps_per_epoch = 5;
  double learning_rate = 1e-3;
  int patience = 20;        // epochs without Dice improvement before halving
  double lr_factor = 0.5;
  double improve_tol = 1e-4;
  LambdaSchedule schedule;
  LossSpec loss;
  std::uint64_t seed = 0;  // kept for interface stability; plain GD is deterministic

  void validate() const;
};

struct RefineResult {
  MultiClassStack prediction;
  Trajectory trajectory;
};

/// Gradient-descent refinement of a per-pixel logit field against the
/// composite loss with the epoch-indexed lambda schedule and plateau-based
/// learning-rate halving. Deterministic; aborts with NumericError naming the
/// offending loss and epoch if a non-finite value appears.
RefineResult refine(const LogitField& init, const MaskStack& gt, const RefineConfig& cfg);

/// Thresholded masks: 0.5 cut for one class, per-pixel argmax otherwise.
MaskStack threshold_prediction(const MultiClassStack& pred);

/// Mean thresholded Dice over foreground classes.
double validation_dice(const MultiClassStack& pred, const MaskStack& gt);

}  // namespace segprior
