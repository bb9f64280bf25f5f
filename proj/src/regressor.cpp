#include "boxlab/regressor.hpp"

#include <algorithm>
#include <cmath>

namespace boxlab {
namespace {

constexpr double kExtentFloor = 1e-6;

void validate_config(const RegressionConfig& cfg) {
  if (!is_known_loss(cfg.loss_id)) throw UnknownLoss("unknown loss id: " + cfg.loss_id);
  if (!(std::isfinite(cfg.lr) && cfg.lr > 0.0)) {
    throw std::invalid_argument("lr must be > 0");
  }
  if (cfg.max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (!(cfg.stop_iou > 0.0 && cfg.stop_iou <= 1.0)) {
    throw std::invalid_argument("stop_iou must lie in (0, 1]");
  }
  if (!(std::isfinite(cfg.momentum) && cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
}

}  // namespace

RegressionTrace run_regression(const Box& init, const Box& target, const RegressionConfig& cfg) {
  validate_config(cfg);
  const LossFn fn = loss_fn(cfg.loss_id);

  RegressionTrace trace;
  Box cur = init;
  LossResult res = fn(cur, target, cfg.weights);
  double cur_iou = iou(cur, target);
  trace.steps.push_back({0, cur, res.value, cur_iou});

  if (cur_iou >= cfg.stop_iou) {
    trace.converged_at = 0;
  } else {
    Grad4 velocity{};
    for (int k = 1; k <= cfg.max_steps; ++k) {
      velocity = cfg.momentum * velocity + res.grad;
      const double cx = cur.cx() - cfg.lr * velocity.cx;
      const double cy = cur.cy() - cfg.lr * velocity.cy;
      const double w = std::max(cur.w() - cfg.lr * velocity.w, kExtentFloor);
      const double h = std::max(cur.h() - cfg.lr * velocity.h, kExtentFloor);
      if (!(std::isfinite(cx) && std::isfinite(cy) && std::isfinite(w) && std::isfinite(h))) {
        trace.final_iou = trace.steps.back().iou;
        throw DivergedToNonFinite(
            "loss '" + cfg.loss_id + "' produced a non-finite parameter at step " +
                std::to_string(k),
            trace);
      }
      cur = Box(cx, cy, w, h);
      res = fn(cur, target, cfg.weights);
      cur_iou = iou(cur, target);
      trace.steps.push_back({k, cur, res.value, cur_iou});
      if (cur_iou >= cfg.stop_iou) {
        trace.converged_at = k;
        break;
      }
    }
  }

  trace.final_iou = trace.steps.back().iou;
  return trace;
}

std::vector<LossRunOutcome> compare_losses(const Box& init, const Box& target,
                                           const RegressionConfig& base,
                                           const std::vector<std::string>& loss_ids) {
  if (loss_ids.empty()) throw std::invalid_argument("loss_ids must be nonempty");
  for (const auto& id : loss_ids) {
    if (!is_known_loss(id)) throw UnknownLoss("unknown loss id: " + id);
  }

  std::vector<LossRunOutcome> out;
  out.reserve(loss_ids.size());
  for (const auto& id : loss_ids) {
    RegressionConfig cfg = base;
    cfg.loss_id = id;
    LossRunOutcome o;
    o.loss_id = id;
    try {
      o.trace = run_regression(init, target, cfg);
    } catch (const DivergedToNonFinite& e) {
      o.trace = e.partial;
      o.diverged = true;
      o.error = e.what();
    }
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace boxlab
