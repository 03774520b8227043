#include "segprior/losses.hpp"

#include <algorithm>
#include <cmath>

#include "segprior/tape.hpp"

namespace segprior {

double LambdaSchedule::at(int epoch) const {
  if (epoch < 0) throw ValidationError("LambdaSchedule: epoch must be >= 0");
  if (!(cap >= 0.0 && cap < 1.0)) throw ValidationError("LambdaSchedule: cap must lie in [0,1)");
  return std::min(initial + step * static_cast<double>(epoch), cap);
}

LossEval dice_loss(const ScalarGrid& pred, const BinaryMask& gt, double eps) {
  check_same_domain(pred.domain(), gt.domain(), "dice_loss");
  double inter = 0.0, sum_p = 0.0, sum_y = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += pred[i] * gt[i];
    sum_p += pred[i];
    sum_y += gt[i];
  }
  const double num = 2.0 * inter + eps;
  const double den = sum_y + sum_p + eps;

  LossEval out;
  out.value = 1.0 - num / den;
  out.grad = ScalarGrid(pred.domain());
  const double den2 = den * den;
  for (std::size_t i = 0; i < pred.size(); ++i)
    out.grad[i] = -(2.0 * gt[i] * den - num) / den2;
  return out;
}

LossEval boundary_loss(const ScalarGrid& pred, const SignedDistanceMap& phi, bool normalize) {
  check_same_domain(pred.domain(), phi.values.domain(), "boundary_loss");
  const double inv = normalize ? 1.0 / static_cast<double>(pred.size()) : 1.0;
  LossEval out;
  out.grad = ScalarGrid(pred.domain());
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    acc += phi.values[i] * pred[i];
    out.grad[i] = phi.values[i] * inv;
  }
  out.value = acc * inv;
  return out;
}

LossEval hausdorff_loss(const ScalarGrid& pred, const BinaryMask& gt) {
  check_same_domain(pred.domain(), gt.domain(), "hausdorff_loss");
  const ScalarGrid d_gt = opposite_class_distance(gt);
  const ScalarGrid d_pred = opposite_class_distance(threshold(pred, 0.5));

  const double inv = 1.0 / static_cast<double>(pred.size());
  LossEval out;
  out.grad = ScalarGrid(pred.domain());
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double w = d_gt[i] * d_gt[i] + d_pred[i] * d_pred[i];
    const double diff = static_cast<double>(gt[i]) - pred[i];
    acc += diff * diff * w;
    // distance maps held constant: d/dp (y-p)^2 = -2 (y-p)
    out.grad[i] = 2.0 * inv * (pred[i] - static_cast<double>(gt[i])) * w;
  }
  out.value = acc * inv;
  return out;
}

LossEval size_loss(const ScalarGrid& pred, const SizeBounds& bounds) {
  if (bounds.lower > bounds.upper) throw ValidationError("size_loss: lower bound exceeds upper bound");
  const double area = pred.sum();
  double g = 0.0;
  double value = 0.0;
  if (area <= bounds.lower) {
    const double d = area - bounds.lower;
    value = d * d;
    g = 2.0 * d;
  } else if (area >= bounds.upper) {
    const double d = area - bounds.upper;
    value = d * d;
    g = 2.0 * d;
  }
  LossEval out;
  out.value = value;
  out.grad = ScalarGrid(pred.domain(), g);
  return out;
}

namespace detail {

CldiceGraph build_cldice_graph(Tape& tape, const ScalarGrid& pred, const ScalarGrid& gt_scalar,
                               const ScalarGrid& gt_skeleton, int skeleton_iters, double eps) {
  const auto p = tape.input(pred);
  const auto y = tape.input(gt_scalar);
  const auto s_gt = tape.input(gt_skeleton);

  auto open = [&](Tape::NodeRef x) { return tape.max_pool3(tape.min_pool3(x)); };

  // predicted soft skeleton
  Tape::NodeRef img = p;
  Tape::NodeRef skel = tape.relu(tape.sub(img, open(img)));
  for (int j = 0; j < skeleton_iters; ++j) {
    img = tape.min_pool3(img);
    const auto delta = tape.relu(tape.sub(img, open(img)));
    skel = tape.add(skel, tape.relu(tape.sub(delta, tape.mul(skel, delta))));
  }

  // precision: predicted skeleton inside the gt mask
  const auto prec = tape.div(tape.affine(tape.sum(tape.mul(skel, y)), 1.0, eps),
                             tape.affine(tape.sum(skel), 1.0, eps));
  // sensitivity: gt skeleton covered by the prediction
  const auto sens = tape.div(tape.affine(tape.sum(tape.mul(s_gt, p)), 1.0, eps),
                             tape.affine(tape.sum(s_gt), 1.0, eps));

  const auto f1 = tape.div(tape.scalar_mul(tape.mul(prec, sens), 2.0),
                           tape.affine(tape.add(prec, sens), 1.0, eps));
  const auto loss = tape.affine(f1, -1.0, 1.0);
  tape.set_output(loss);
  return CldiceGraph{p.index, loss.index};
}

LossEval cldice_loss_cached(const ScalarGrid& pred, const BinaryMask& gt,
                            const ScalarGrid& gt_skeleton, int skeleton_iters, double eps) {
  check_same_domain(pred.domain(), gt.domain(), "cldice_loss");
  check_same_domain(pred.domain(), gt_skeleton.domain(), "cldice_loss");
  if (skeleton_iters < 1) throw ValidationError("cldice_loss: skeleton iteration count must be >= 1");

  const bool gt_empty = gt.foreground_count() == 0;
  const bool pred_empty = threshold(pred, 0.5).foreground_count() == 0;
  if (gt_empty || pred_empty) {
    LossEval out;
    out.value = (gt_empty == pred_empty) ? 0.0 : 1.0;
    out.grad = ScalarGrid(pred.domain());
    return out;
  }

  Tape tape;
  const CldiceGraph g = build_cldice_graph(tape, pred, gt.to_scalar(), gt_skeleton, skeleton_iters, eps);
  tape.backward();

  LossEval out;
  out.value = tape.scalar_value(Tape::NodeRef{g.output_node});
  out.grad = tape.gradient(Tape::NodeRef{g.pred_node});
  return out;
}

}  // namespace detail

LossEval cldice_loss(const ScalarGrid& pred, const BinaryMask& gt, int skeleton_iters, double eps) {
  check_same_domain(pred.domain(), gt.domain(), "cldice_loss");
  if (skeleton_iters < 1) throw ValidationError("cldice_loss: skeleton iteration count must be >= 1");
  const ScalarGrid gt_skel = soft_skeleton(gt.to_scalar(), skeleton_iters);
  return detail::cldice_loss_cached(pred, gt, gt_skel, skeleton_iters, eps);
}

double cldice_score(const ScalarGrid& pred, const BinaryMask& gt, int skeleton_iters, double eps) {
  return 1.0 - cldice_loss(pred, gt, skeleton_iters, eps).value;
}

LossEval composite(const LossEval& dice, const LossEval& prior, double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw ValidationError("composite: lambda must lie in [0,1)");
  if (lambda == 0.0) return dice;  // bit-identical to the fitting term
  check_same_domain(dice.grad.domain(), prior.grad.domain(), "composite");
  LossEval out;
  out.value = (1.0 - lambda) * dice.value + lambda * prior.value;
  out.grad = ScalarGrid(dice.grad.domain());
  for (std::size_t i = 0; i < out.grad.size(); ++i)
    out.grad[i] = (1.0 - lambda) * dice.grad[i] + lambda * prior.grad[i];
  return out;
}

std::string prior_config_name(PriorKind kind) {
  switch (kind) {
    case PriorKind::none: return "dice";
    case PriorKind::boundary: return "dice+boundary";
    case PriorKind::hausdorff: return "dice+hausdorff";
    case PriorKind::size: return "dice+size";
    case PriorKind::cldice: return "dice+cldice";
  }
  throw ValidationError("prior_config_name: unknown prior kind");
}

PriorKind prior_from_config_name(const std::string& name) {
  if (name == "dice") return PriorKind::none;
  if (name == "dice+boundary") return PriorKind::boundary;
  if (name == "dice+hausdorff") return PriorKind::hausdorff;
  if (name == "dice+size") return PriorKind::size;
  if (name == "dice+cldice") return PriorKind::cldice;
  throw ValidationError("unknown loss configuration '" + name +
                        "' (expected dice, dice+boundary, dice+hausdorff, dice+size, dice+cldice)");
}

PriorContext PriorContext::build(const MaskStack& gt, const LossSpec& spec) {
  PriorContext ctx;
  const auto fg = foreground_classes(gt.classes());
  if (spec.prior == PriorKind::boundary)
    for (int c : fg) ctx.signed_dist.push_back(signed_distance(gt.layer(c)));
  if (spec.prior == PriorKind::cldice)
    for (int c : fg) ctx.gt_skeleton.push_back(soft_skeleton(gt.layer(c).to_scalar(), spec.skeleton_iters));
  return ctx;
}

CompositeStackEval evaluate_composite_stack(const MultiClassStack& pred, const MaskStack& gt,
                                            const LossSpec& spec, double lambda,
                                            const PriorContext& ctx) {
  check_same_domain(pred.domain(), gt.domain(), "evaluate_composite_stack");
  if (pred.classes() != gt.classes())
    throw ValidationError("evaluate_composite_stack: class count mismatch");

  const auto fg = foreground_classes(pred.classes());
  if (spec.prior == PriorKind::size && spec.size_bounds.size() != fg.size())
    throw ValidationError("evaluate_composite_stack: size prior needs one bound per foreground class");

  CompositeStackEval out;
  out.grad = MultiClassStack(pred.domain(), pred.classes());
  const double inv_n = 1.0 / static_cast<double>(fg.size());

  for (std::size_t k = 0; k < fg.size(); ++k) {
    const int c = fg[k];
    const ScalarGrid& p = pred.layer(c);
    const BinaryMask& y = gt.layer(c);

    LossEval dice = dice_loss(p, y, spec.eps);
    out.dice_value += dice.value * inv_n;

    // At lambda == 0 the composite is the dice evaluation bit for bit, so the
    // prior can be skipped outright.
    const PriorKind active = lambda == 0.0 ? PriorKind::none : spec.prior;

    LossEval mixed;
    switch (active) {
      case PriorKind::none:
        mixed = std::move(dice);
        break;
      case PriorKind::boundary:
        mixed = composite(dice, boundary_loss(p, ctx.signed_dist[k], spec.boundary_normalize), lambda);
        break;
      case PriorKind::hausdorff:
        mixed = composite(dice, hausdorff_loss(p, y), lambda);
        break;
      case PriorKind::size:
        mixed = composite(dice, size_loss(p, spec.size_bounds[k]), lambda);
        break;
      case PriorKind::cldice:
        mixed = composite(
            dice, detail::cldice_loss_cached(p, y, ctx.gt_skeleton[k], spec.skeleton_iters, spec.eps),
            lambda);
        break;
    }
    out.value += mixed.value * inv_n;
    ScalarGrid& g = out.grad.layer(c);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = mixed.grad[i] * inv_n;
  }
  return out;
}

}  // namespace segprior
