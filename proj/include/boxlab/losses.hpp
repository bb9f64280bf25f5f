#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "boxlab/box.hpp"

namespace boxlab {

struct InvalidProbability : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidLabel : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnknownLoss : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown by grad_check when the pair sits within tolerance of a min/max
/// switch point, where the analytic subgradient and finite differences
/// legitimately disagree.
struct NonDifferentiablePoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Gradient with respect to the predicted box parameters (cx, cy, w, h);
/// the target box is always held constant.
struct Grad4 {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double norm() const { return std::sqrt(cx * cx + cy * cy + w * w + h * h); }

  Grad4& operator+=(const Grad4& o) {
    cx += o.cx;
    cy += o.cy;
    w += o.w;
    h += o.h;
    return *this;
  }
};

inline Grad4 operator*(double s, const Grad4& g) { return {s * g.cx, s * g.cy, s * g.w, s * g.h}; }
inline Grad4 operator+(Grad4 a, const Grad4& b) { return a += b; }
inline Grad4 operator-(const Grad4& a, const Grad4& b) {
  return {a.cx - b.cx, a.cy - b.cy, a.w - b.w, a.h - b.h};
}

struct LossResult {
  double value = 0.0;
  Grad4 grad;
};

/// Coefficients of the joint loss; defaults are the reference setting
/// alpha=beta=gamma=0.1, eta=0.7.
struct JointWeights {
  double alpha = 0.1;
  double beta = 0.1;
  double gamma = 0.1;
  double eta = 0.7;
};

/// Weights of the composite detection loss (classification, objectness,
/// localization). Defaults to unit weights.
struct CompositeWeights {
  double cls = 1.0;
  double obj = 1.0;
  double loc = 1.0;
};

LossResult loss_iou(const Box& pred, const Box& target);
LossResult loss_giou(const Box& pred, const Box& target);
LossResult loss_diou(const Box& pred, const Box& target);
LossResult loss_ciou(const Box& pred, const Box& target);
LossResult loss_eiou(const Box& pred, const Box& target);
LossResult loss_joint(const Box& pred, const Box& target, const JointWeights& wts = {});

/// Binary cross entropy; p is clamped to [1e-7, 1 - 1e-7] before the logs.
/// Throws InvalidProbability / InvalidLabel on out-of-domain inputs.
double loss_bce(double p, int y);

/// lambda_cls * cls + lambda_obj * obj + lambda_loc * loc.
double loss_composite(double cls, double obj, double loc, const CompositeWeights& wts = {});

/// Registry of loss identifiers as used by the CLI and config files.
using LossFn = std::function<LossResult(const Box&, const Box&, const JointWeights&)>;
const std::vector<std::string>& known_loss_ids();  // iou giou diou ciou eiou joint
bool is_known_loss(const std::string& id);
LossFn loss_fn(const std::string& id);  // throws UnknownLoss

/// True when any pred corner coordinate lies within tol of a target corner
/// coordinate on the same axis. These are exactly the min/max switch points
/// of the loss family (including touching-boundary disjointness).
bool near_nondifferentiable(const Box& pred, const Box& target, double tol = 1e-3);

/// Max over the four parameters of |analytic - central difference| /
/// max(1, |analytic|). For "ciou" and "joint" the w/h differences are taken
/// on the expression with the aspect coefficient alpha_c frozen at the base
/// point, matching the implemented gradient convention; cx/cy always
/// difference the full expression. Throws NonDifferentiablePoint when the
/// pair fails the near_nondifferentiable filter.
double grad_check(const std::string& loss_id, const Box& pred, const Box& target, double step,
                  const JointWeights& wts = {});

}  // namespace boxlab
