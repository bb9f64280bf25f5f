#include "boxlab/box.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace boxlab {

Box::Box(double cx, double cy, double w, double h) : cx_(cx), cy_(cy), w_(w), h_(h) {
  if (!(std::isfinite(cx) && std::isfinite(cy) && std::isfinite(w) && std::isfinite(h))) {
    throw NonFinite("box field is NaN or infinite");
  }
  if (!(w > 0.0 && h > 0.0)) {
    throw DegenerateBox("box extents must be strictly positive (w=" + std::to_string(w) +
                        ", h=" + std::to_string(h) + ")");
  }
}

Box Box::from_corners(double x1, double y1, double x2, double y2) {
  if (!(std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2))) {
    throw NonFinite("box corner is NaN or infinite");
  }
  if (!(x1 < x2 && y1 < y2)) {
    throw DegenerateBox("corners must satisfy x1 < x2 and y1 < y2");
  }
  return Box(0.5 * (x1 + x2), 0.5 * (y1 + y2), x2 - x1, y2 - y1);
}

BoxPairGeometry pair_geometry(const Box& a, const Box& b) {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;

  const double cw = std::max(a.x2(), b.x2()) - std::min(a.x1(), b.x1());
  const double ch = std::max(a.y2(), b.y2()) - std::min(a.y1(), b.y1());

  const double dx = a.cx() - b.cx();
  const double dy = a.cy() - b.cy();

  BoxPairGeometry g;
  g.intersection_area = inter;
  g.union_area = a.area() + b.area() - inter;
  g.enclosing_w = cw;
  g.enclosing_h = ch;
  g.enclosing_area = cw * ch;
  g.center_dist_sq = dx * dx + dy * dy;
  g.enclosing_diag_sq = cw * cw + ch * ch;
  return g;
}

double iou(const Box& a, const Box& b) {
  const BoxPairGeometry g = pair_geometry(a, b);
  return g.intersection_area / g.union_area;
}

}  // namespace boxlab
