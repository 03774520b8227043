#include "segprior/refiner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "segprior/metrics.hpp"

namespace segprior {

LogitField::LogitField(std::vector<ScalarGrid> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ValidationError("LogitField: at least one layer required");
  dom_ = layers_[0].domain();
  for (const auto& l : layers_)
    if (l.domain() != dom_) throw ValidationError("LogitField: layers must share a domain");
}

MultiClassStack predict(const LogitField& logits) {
  const int classes = logits.classes();
  MultiClassStack out(logits.domain(), classes);
  if (classes == 1) {
    const ScalarGrid& z = logits.layer(0);
    ScalarGrid& p = out.layer(0);
    for (std::size_t i = 0; i < z.size(); ++i) p[i] = 1.0 / (1.0 + std::exp(-z[i]));
    return out;
  }
  for (std::size_t i = 0; i < logits.domain().size(); ++i) {
    double zmax = logits.layer(0)[i];
    for (int c = 1; c < classes; ++c) zmax = std::max(zmax, logits.layer(c)[i]);
    double den = 0.0;
    for (int c = 0; c < classes; ++c) den += std::exp(logits.layer(c)[i] - zmax);
    for (int c = 0; c < classes; ++c) out.layer(c)[i] = std::exp(logits.layer(c)[i] - zmax) / den;
  }
  return out;
}

ScalarGrid logistic_chain(const ScalarGrid& grad_pred, const ScalarGrid& pred) {
  check_same_domain(grad_pred.domain(), pred.domain(), "logistic_chain");
  ScalarGrid out(pred.domain());
  for (std::size_t i = 0; i < pred.size(); ++i) out[i] = grad_pred[i] * pred[i] * (1.0 - pred[i]);
  return out;
}

MultiClassStack softmax_chain(const MultiClassStack& grad_pred, const MultiClassStack& pred) {
  check_same_domain(grad_pred.domain(), pred.domain(), "softmax_chain");
  if (grad_pred.classes() != pred.classes())
    throw ValidationError("softmax_chain: class count mismatch");
  const int classes = pred.classes();
  MultiClassStack out(pred.domain(), classes);
  for (std::size_t i = 0; i < pred.domain().size(); ++i) {
    double dot = 0.0;
    for (int c = 0; c < classes; ++c) dot += pred.layer(c)[i] * grad_pred.layer(c)[i];
    for (int c = 0; c < classes; ++c)
      out.layer(c)[i] = pred.layer(c)[i] * (grad_pred.layer(c)[i] - dot);
  }
  return out;
}

void Trajectory::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << "epoch,lambda,loss,val_dice,lr\n";
  char buf[160];
  for (const TrajectoryPoint& p : points) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.10g,%.10g,%.10g\n", p.epoch, p.lambda, p.loss,
                  p.val_dice, p.learning_rate);
    out << buf;
  }
  if (!out) throw IoError(path.string() + ": write failure");
}

void RefineConfig::validate() const {
  if (epochs < 0) throw ValidationError("RefineConfig: epochs must be >= 0");
  if (steps_per_epoch < 1) throw ValidationError("RefineConfig: steps per epoch must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("RefineConfig: learning rate must be positive");
  if (patience < 1) throw ValidationError("RefineConfig: patience must be >= 1");
  if (!(lr_factor > 0.0 && lr_factor < 1.0))
    throw ValidationError("RefineConfig: lr factor must lie in (0,1)");
  if (!(schedule.cap >= 0.0 && schedule.cap < 1.0))
    throw ValidationError("RefineConfig: lambda cap must lie in [0,1)");
  if (loss.skeleton_iters < 1) throw ValidationError("RefineConfig: skeleton iterations must be >= 1");
}

MaskStack threshold_prediction(const MultiClassStack& pred) {
  const int classes = pred.classes();
  if (classes == 1) return MaskStack::single(threshold(pred.layer(0), 0.5));
  std::vector<BinaryMask> layers(static_cast<std::size_t>(classes), BinaryMask(pred.domain()));
  for (std::size_t i = 0; i < pred.domain().size(); ++i) {
    int best = 0;
    for (int c = 1; c < classes; ++c)
      if (pred.layer(c)[i] > pred.layer(best)[i]) best = c;
    layers[static_cast<std::size_t>(best)][i] = 1;
  }
  return MaskStack(std::move(layers));
}

double validation_dice(const MultiClassStack& pred, const MaskStack& gt) {
  check_same_domain(pred.domain(), gt.domain(), "validation_dice");
  if (pred.classes() != gt.classes()) throw ValidationError("validation_dice: class count mismatch");
  const MaskStack hard = threshold_prediction(pred);
  const auto fg = foreground_classes(pred.classes());
  double acc = 0.0;
  for (int c : fg) acc += dice_score(hard.layer(c), gt.layer(c));
  return acc / static_cast<double>(fg.size());
}

namespace {

void check_finite(double value, const MultiClassStack& grad, const LossSpec& spec, int epoch,
                  int step) {
  bool ok = std::isfinite(value);
  for (int c = 0; ok && c < grad.classes(); ++c) ok = grad.layer(c).all_finite();
  if (!ok)
    throw NumericError("refine: non-finite value in loss '" + prior_config_name(spec.prior) +
                       "' at epoch " + std::to_string(epoch) + ", step " + std::to_string(step));
}

}  // namespace

RefineResult refine(const LogitField& init, const MaskStack& gt, const RefineConfig& cfg) {
  cfg.validate();
  check_same_domain(init.domain(), gt.domain(), "refine");
  if (init.classes() != gt.classes()) throw ValidationError("refine: class count mismatch");

  LogitField logits = init;
  RefineResult res;
  res.prediction = predict(logits);
  if (cfg.epochs == 0) return res;

  const PriorContext ctx = PriorContext::build(gt, cfg.loss);
  const int classes = logits.classes();

  double lr = cfg.learning_rate;
  double best_dice = -1.0;
  int stale_epochs = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lambda = cfg.schedule.at(epoch);
    double last_loss = 0.0;
    for (int step = 0; step < cfg.steps_per_epoch; ++step) {
      const MultiClassStack pred = predict(logits);
      const CompositeStackEval eval = evaluate_composite_stack(pred, gt, cfg.loss, lambda, ctx);
      check_finite(eval.value, eval.grad, cfg.loss, epoch, step);
      last_loss = eval.value;

      if (classes == 1) {
        const ScalarGrid gz = logistic_chain(eval.grad.layer(0), pred.layer(0));
        ScalarGrid& z = logits.layer(0);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] -= lr * gz[i];
      } else {
        const MultiClassStack gz = softmax_chain(eval.grad, pred);
        for (int c = 0; c < classes; ++c) {
          ScalarGrid& z = logits.layer(c);
          for (std::size_t i = 0; i < z.size(); ++i) z[i] -= lr * gz.layer(c)[i];
        }
      }
    }

    res.prediction = predict(logits);
    const double vdice = validation_dice(res.prediction, gt);
    res.trajectory.points.push_back({epoch, lambda, last_loss, vdice, lr});

    if (vdice > best_dice + cfg.improve_tol) {
      best_dice = vdice;
      stale_epochs = 0;
    } else if (++stale_epochs >= cfg.patience) {
      lr *= cfg.lr_factor;
      stale_epochs = 0;
    }
  }
  return res;
}

}  // namespace segprior
