#include "boxlab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace boxlab {
namespace {

// Floor applied to squared enclosing-box denominators before division. With
// valid boxes these are always positive; the floor only shields pathological
// near-degenerate float inputs.
constexpr double kDenomFloor = 1e-9;

constexpr double kFourOverPiSq = 4.0 / (M_PI * M_PI);

// Everything the loss family needs about a (pred, target) pair, with
// derivatives taken with respect to the predicted (cx, cy, w, h). min/max
// subgradients use the branch active at the current point, ties selecting
// the first (pred) argument.
struct PairTerms {
  double inter, uni, iou;
  Grad4 d_inter, d_uni, d_iou;
  double cw, ch;  // enclosing box extents
  Grad4 d_cw, d_ch;
  double encl_area;
  Grad4 d_encl_area;
  double d2;  // squared center distance
  Grad4 d_d2;
  double c2;  // squared enclosing diagonal, floored
  Grad4 d_c2;
  double dist_ratio;  // d2 / c2
  Grad4 d_dist_ratio;
};

PairTerms pair_terms(const Box& p, const Box& t) {
  const double pl = p.x1(), pr = p.x2(), pt = p.y1(), pb = p.y2();
  const double gl = t.x1(), gr = t.x2(), gt = t.y1(), gb = t.y2();

  PairTerms m{};

  // Intersection extents. sX = 1 when the pred edge is the active branch.
  const double sR = pr <= gr ? 1.0 : 0.0;
  const double sL = pl >= gl ? 1.0 : 0.0;
  const double sB = pb <= gb ? 1.0 : 0.0;
  const double sT = pt >= gt ? 1.0 : 0.0;
  const double iw = std::min(pr, gr) - std::max(pl, gl);
  const double ih = std::min(pb, gb) - std::max(pt, gt);

  if (iw > 0.0 && ih > 0.0) {
    m.inter = iw * ih;
    m.d_inter.cx = ih * (sR - sL);
    m.d_inter.w = ih * 0.5 * (sR + sL);
    m.d_inter.cy = iw * (sB - sT);
    m.d_inter.h = iw * 0.5 * (sB + sT);
  } else {
    m.inter = 0.0;  // flat region: the intersection gradient vanishes too
  }

  m.uni = p.area() + t.area() - m.inter;
  m.d_uni = Grad4{0.0, 0.0, p.h(), p.w()} - m.d_inter;

  m.iou = m.inter / m.uni;
  const double inv_uni_sq = 1.0 / (m.uni * m.uni);
  m.d_iou = inv_uni_sq * (m.uni * m.d_inter - m.inter * m.d_uni);

  // Enclosing box. uX = 1 when the pred edge is the active branch.
  const double uR = pr >= gr ? 1.0 : 0.0;
  const double uL = pl <= gl ? 1.0 : 0.0;
  const double uB = pb >= gb ? 1.0 : 0.0;
  const double uT = pt <= gt ? 1.0 : 0.0;
  m.cw = std::max(pr, gr) - std::min(pl, gl);
  m.ch = std::max(pb, gb) - std::min(pt, gt);
  m.d_cw = {uR - uL, 0.0, 0.5 * (uR + uL), 0.0};
  m.d_ch = {0.0, uB - uT, 0.0, 0.5 * (uB + uT)};

  m.encl_area = m.cw * m.ch;
  m.d_encl_area = m.ch * m.d_cw + m.cw * m.d_ch;

  const double dx = p.cx() - t.cx();
  const double dy = p.cy() - t.cy();
  m.d2 = dx * dx + dy * dy;
  m.d_d2 = {2.0 * dx, 2.0 * dy, 0.0, 0.0};

  m.c2 = std::max(m.cw * m.cw + m.ch * m.ch, kDenomFloor);
  m.d_c2 = 2.0 * m.cw * m.d_cw + 2.0 * m.ch * m.d_ch;

  m.dist_ratio = m.d2 / m.c2;
  const double inv_c2_sq = 1.0 / (m.c2 * m.c2);
  m.d_dist_ratio = inv_c2_sq * (m.c2 * m.d_d2 - m.d2 * m.d_c2);

  return m;
}

// Aspect-consistency term of CIoU and its coefficient.
double aspect_v(const Box& p, const Box& t) {
  const double diff = std::atan(t.w() / t.h()) - std::atan(p.w() / p.h());
  return kFourOverPiSq * diff * diff;
}

double aspect_alpha(double iou_val, double v) {
  const double denom = (1.0 - iou_val) + v;
  return denom > 0.0 ? v / denom : 0.0;
}

void validate_weights(const JointWeights& w) {
  const bool ok = std::isfinite(w.alpha) && std::isfinite(w.beta) && std::isfinite(w.gamma) &&
                  std::isfinite(w.eta) && w.alpha >= 0.0 && w.beta >= 0.0 && w.gamma >= 0.0 &&
                  w.eta >= 0.0;
  if (!ok) throw std::invalid_argument("joint weights must be finite and >= 0");
}

// CIoU value with the aspect coefficient pinned to a given value; used by
// the finite-difference harness for the w/h components.
double ciou_value_frozen(const Box& p, const Box& t, double alpha) {
  const PairTerms m = pair_terms(p, t);
  return 1.0 - m.iou + m.dist_ratio + alpha * aspect_v(p, t);
}

double ciou_alpha_at(const Box& p, const Box& t) {
  return aspect_alpha(iou(p, t), aspect_v(p, t));
}

Box perturbed(const Box& b, int comp, double delta) {
  double f[4] = {b.cx(), b.cy(), b.w(), b.h()};
  f[comp] += delta;
  return Box(f[0], f[1], f[2], f[3]);
}

double grad_component(const Grad4& g, int comp) {
  switch (comp) {
    case 0: return g.cx;
    case 1: return g.cy;
    case 2: return g.w;
    default: return g.h;
  }
}

}  // namespace

LossResult loss_iou(const Box& pred, const Box& target) {
  const PairTerms m = pair_terms(pred, target);
  return {1.0 - m.iou, -1.0 * m.d_iou};
}

LossResult loss_giou(const Box& pred, const Box& target) {
  const PairTerms m = pair_terms(pred, target);
  // penalty = (A_c - U) / A_c differentiates as (U * dA_c - A_c * dU) / A_c^2
  const double penalty = (m.encl_area - m.uni) / m.encl_area;
  const double inv_encl_sq = 1.0 / (m.encl_area * m.encl_area);
  const Grad4 d_penalty = inv_encl_sq * (m.uni * m.d_encl_area - m.encl_area * m.d_uni);
  return {1.0 - m.iou + penalty, -1.0 * m.d_iou + d_penalty};
}

LossResult loss_diou(const Box& pred, const Box& target) {
  const PairTerms m = pair_terms(pred, target);
  return {1.0 - m.iou + m.dist_ratio, -1.0 * m.d_iou + m.d_dist_ratio};
}

LossResult loss_ciou(const Box& pred, const Box& target) {
  const PairTerms m = pair_terms(pred, target);
  const double v = aspect_v(pred, target);
  const double alpha = aspect_alpha(m.iou, v);

  const double pw = pred.w(), ph = pred.h();
  const double diff = std::atan(target.w() / target.h()) - std::atan(pw / ph);
  const double inv_sq = 1.0 / (pw * pw + ph * ph);
  const double dv_dw = -2.0 * kFourOverPiSq * diff * ph * inv_sq;
  const double dv_dh = 2.0 * kFourOverPiSq * diff * pw * inv_sq;

  // alpha_c is frozen for the extent components; for the centers v is
  // constant, so d(alpha*v) reduces to the exact alpha^2 * dIoU term.
  Grad4 grad = -1.0 * m.d_iou + m.d_dist_ratio;
  grad.cx += alpha * alpha * m.d_iou.cx;
  grad.cy += alpha * alpha * m.d_iou.cy;
  grad.w += alpha * dv_dw;
  grad.h += alpha * dv_dh;

  return {1.0 - m.iou + m.dist_ratio + alpha * v, grad};
}

LossResult loss_eiou(const Box& pred, const Box& target) {
  const PairTerms m = pair_terms(pred, target);

  const double dw = pred.w() - target.w();
  const double dh = pred.h() - target.h();
  const double cw2 = std::max(m.cw * m.cw, kDenomFloor);
  const double ch2 = std::max(m.ch * m.ch, kDenomFloor);

  const double w_term = dw * dw / cw2;
  const double h_term = dh * dh / ch2;

  // d[(dw)^2 / cw^2] = 2*dw*[comp==w]/cw^2 - (dw)^2 * 2*cw*d_cw / cw^4
  const double inv_cw2_sq = 1.0 / (cw2 * cw2);
  const double inv_ch2_sq = 1.0 / (ch2 * ch2);
  Grad4 d_w_term = (-2.0 * dw * dw * m.cw * inv_cw2_sq) * m.d_cw;
  d_w_term.w += 2.0 * dw / cw2;
  Grad4 d_h_term = (-2.0 * dh * dh * m.ch * inv_ch2_sq) * m.d_ch;
  d_h_term.h += 2.0 * dh / ch2;

  const double value = 1.0 - m.iou + m.dist_ratio + w_term + h_term;
  const Grad4 grad = -1.0 * m.d_iou + m.d_dist_ratio + d_w_term + d_h_term;
  return {value, grad};
}

LossResult loss_joint(const Box& pred, const Box& target, const JointWeights& wts) {
  validate_weights(wts);
  const LossResult ciou = loss_ciou(pred, target);
  const LossResult diou = loss_diou(pred, target);
  const LossResult giou = loss_giou(pred, target);
  const LossResult eiou = loss_eiou(pred, target);
  LossResult r;
  r.value = wts.alpha * ciou.value + wts.beta * diou.value + wts.gamma * giou.value +
            wts.eta * eiou.value;
  r.grad = wts.alpha * ciou.grad + wts.beta * diou.grad + wts.gamma * giou.grad +
           wts.eta * eiou.grad;
  return r;
}

double loss_bce(double p, int y) {
  if (!(std::isfinite(p) && p >= 0.0 && p <= 1.0)) {
    throw InvalidProbability("probability must lie in [0, 1]");
  }
  if (y != 0 && y != 1) {
    throw InvalidLabel("label must be 0 or 1");
  }
  constexpr double eps = 1e-7;
  const double q = std::clamp(p, eps, 1.0 - eps);
  return -(y * std::log(q) + (1 - y) * std::log(1.0 - q));
}

double loss_composite(double cls, double obj, double loc, const CompositeWeights& wts) {
  const bool inputs_ok = std::isfinite(cls) && std::isfinite(obj) && std::isfinite(loc) &&
                         cls >= 0.0 && obj >= 0.0 && loc >= 0.0;
  if (!inputs_ok) throw std::invalid_argument("loss components must be finite and >= 0");
  const bool wts_ok = std::isfinite(wts.cls) && std::isfinite(wts.obj) && std::isfinite(wts.loc) &&
                      wts.cls >= 0.0 && wts.obj >= 0.0 && wts.loc >= 0.0;
  if (!wts_ok) throw std::invalid_argument("composite weights must be finite and >= 0");
  return wts.cls * cls + wts.obj * obj + wts.loc * loc;
}

const std::vector<std::string>& known_loss_ids() {
  static const std::vector<std::string> ids = {"iou", "giou", "diou", "ciou", "eiou", "joint"};
  return ids;
}

bool is_known_loss(const std::string& id) {
  const auto& ids = known_loss_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

LossFn loss_fn(const std::string& id) {
  // Built once, read-only afterwards.
  static const std::map<std::string, LossFn> registry = {
      {"iou", [](const Box& p, const Box& t, const JointWeights&) { return loss_iou(p, t); }},
      {"giou", [](const Box& p, const Box& t, const JointWeights&) { return loss_giou(p, t); }},
      {"diou", [](const Box& p, const Box& t, const JointWeights&) { return loss_diou(p, t); }},
      {"ciou", [](const Box& p, const Box& t, const JointWeights&) { return loss_ciou(p, t); }},
      {"eiou", [](const Box& p, const Box& t, const JointWeights&) { return loss_eiou(p, t); }},
      {"joint",
       [](const Box& p, const Box& t, const JointWeights& w) { return loss_joint(p, t, w); }},
  };
  auto it = registry.find(id);
  if (it == registry.end()) throw UnknownLoss("unknown loss id: " + id);
  return it->second;
}

bool near_nondifferentiable(const Box& pred, const Box& target, double tol) {
  const double px[2] = {pred.x1(), pred.x2()};
  const double gx[2] = {target.x1(), target.x2()};
  const double py[2] = {pred.y1(), pred.y2()};
  const double gy[2] = {target.y1(), target.y2()};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (std::abs(px[i] - gx[j]) < tol) return true;
      if (std::abs(py[i] - gy[j]) < tol) return true;
    }
  }
  return false;
}

double grad_check(const std::string& loss_id, const Box& pred, const Box& target, double step,
                  const JointWeights& wts) {
  if (!(std::isfinite(step) && step > 0.0)) throw std::invalid_argument("step must be > 0");
  const LossFn fn = loss_fn(loss_id);
  if (near_nondifferentiable(pred, target)) {
    throw NonDifferentiablePoint("pair lies within 1e-3 of a min/max switch point");
  }

  const LossResult analytic = fn(pred, target, wts);
  const bool has_aspect = loss_id == "ciou" || loss_id == "joint";
  const double base_alpha = has_aspect ? ciou_alpha_at(pred, target) : 0.0;

  auto value_at = [&](const Box& b, bool freeze_aspect) -> double {
    if (!freeze_aspect) return fn(b, target, wts).value;
    if (loss_id == "ciou") return ciou_value_frozen(b, target, base_alpha);
    return wts.alpha * ciou_value_frozen(b, target, base_alpha) +
           wts.beta * loss_diou(b, target).value + wts.gamma * loss_giou(b, target).value +
           wts.eta * loss_eiou(b, target).value;
  };

  double max_err = 0.0;
  for (int comp = 0; comp < 4; ++comp) {
    const bool freeze = has_aspect && comp >= 2;
    const double hi = value_at(perturbed(pred, comp, step), freeze);
    const double lo = value_at(perturbed(pred, comp, -step), freeze);
    const double fd = (hi - lo) / (2.0 * step);
    const double an = grad_component(analytic.grad, comp);
    const double err = std::abs(an - fd) / std::max(1.0, std::abs(an));
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace boxlab
