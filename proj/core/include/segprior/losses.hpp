#pragma once

#include <string>
#include <vector>

#include "segprior/grid.hpp"
#include "segprior/transforms.hpp"

namespace segprior {

/// Loss value plus the exact gradient with respect to the predicted
/// probability map.
struct LossEval {
  double value = 0.0;
  ScalarGrid grad;
};

/// Permissible soft-area band [lower, upper] in pixels.
struct SizeBounds {
  double lower = 0.0;
  double upper = 0.0;

  SizeBounds() = default;
  SizeBounds(double a, double b) : lower(a), upper(b) {
    if (!(a >= 0.0) || a > b) throw ValidationError("SizeBounds: need 0 <= lower <= upper");
  }
};

/// Epoch-indexed mixing weight: lambda(e) = min(initial + step * e, cap).
/// The cap keeps the fitting term alive; the uncapped ramp would exceed 1
/// within a long training run.
struct LambdaSchedule {
  double initial = 0.01;
  double step = 0.01;
  double cap = 0.99;

  double at(int epoch) const;
};

/// Soft Dice: 1 - (2*sum(y*p) + eps) / (sum(y) + sum(p) + eps).
LossEval dice_loss(const ScalarGrid& pred, const BinaryMask& gt, double eps = 1e-6);

/// sum(phi * p), optionally divided by |domain| so the magnitude stays
/// commensurate with Dice when mixing. Linear in the prediction, so the
/// gradient is phi itself.
LossEval boundary_loss(const ScalarGrid& pred, const SignedDistanceMap& phi, bool normalize = true);

/// (1/|domain|) * sum((y - p)^2 * (D(y)^2 + D(p)^2)) with D the distance to
/// the opposite class; D(p) is rebuilt from threshold(pred, 0.5) each call and
/// both maps are treated as constants in the gradient.
LossEval hausdorff_loss(const ScalarGrid& pred, const BinaryMask& gt);

/// Quadratic penalty on the soft area A = sum(pred) outside [lower, upper];
/// the gradient is spatially uniform.
LossEval size_loss(const ScalarGrid& pred, const SizeBounds& bounds);

/// 1 - clDice, where clDice is the F1 score of skeleton precision
/// (gt mask vs predicted skeleton) and skeleton sensitivity (prediction vs gt
/// skeleton). Gradients flow through the full soft-skeleton pipeline via the
/// tape. If exactly one of {gt, threshold(pred, 0.5)} is empty the loss is 1,
/// if both are empty it is 0, with zero gradient either way.
LossEval cldice_loss(const ScalarGrid& pred, const BinaryMask& gt, int skeleton_iters,
                     double eps = 1e-6);

/// Raw clDice score (higher is better), for reporting.
double cldice_score(const ScalarGrid& pred, const BinaryMask& gt, int skeleton_iters,
                    double eps = 1e-6);

/// (1 - lambda) * dice + lambda * prior, applied to value and gradient alike.
/// At lambda == 0 the result is bit-identical to the dice evaluation.
LossEval composite(const LossEval& dice, const LossEval& prior, double lambda);

// ---- Prior selection plumbing shared by the refiner and the harness ----

enum class PriorKind { none, boundary, hausdorff, size, cldice };

std::string prior_config_name(PriorKind kind);        // "dice", "dice+size", ...
PriorKind prior_from_config_name(const std::string&); // strict inverse

struct LossSpec {
  PriorKind prior = PriorKind::none;
  bool boundary_normalize = true;
  int skeleton_iters = 10;
  std::vector<SizeBounds> size_bounds;  // one entry per foreground class
  double eps = 1e-6;
};

/// Ground-truth transforms that stay fixed while one prediction is optimized:
/// signed distance maps for the boundary prior and gt skeletons for clDice,
/// one per foreground class.
struct PriorContext {
  std::vector<SignedDistanceMap> signed_dist;
  std::vector<ScalarGrid> gt_skeleton;

  static PriorContext build(const MaskStack& gt, const LossSpec& spec);
};

struct CompositeStackEval {
  double value = 0.0;
  double dice_value = 0.0;
  MultiClassStack grad;
};

/// Composite loss over a prediction stack: per foreground class the configured
/// prior is mixed with Dice via `lambda`, then classes are averaged uniformly.
CompositeStackEval evaluate_composite_stack(const MultiClassStack& pred, const MaskStack& gt,
                                            const LossSpec& spec, double lambda,
                                            const PriorContext& ctx);

class Tape;

namespace detail {

// Internal: clDice against a precomputed ground-truth skeleton.
LossEval cldice_loss_cached(const ScalarGrid& pred, const BinaryMask& gt,
                            const ScalarGrid& gt_skeleton, int skeleton_iters, double eps);

struct CldiceGraph {
  std::uint32_t pred_node = 0;
  std::uint32_t output_node = 0;
};

// Records the full skeleton + F1 pipeline on a caller-owned tape; the
// finite-difference harness uses this to analyze the recorded graph.
CldiceGraph build_cldice_graph(Tape& tape, const ScalarGrid& pred, const ScalarGrid& gt_scalar,
                               const ScalarGrid& gt_skeleton, int skeleton_iters, double eps);

}  // namespace detail

}  // namespace segprior
