#pragma once

#include <stdexcept>

namespace boxlab {

struct DegenerateBox : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonFinite : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Axis-aligned box in continuous coordinates, stored as center + extents.
/// Extents are strictly positive and all fields finite; the area is exactly
/// w*h (no pixel-inclusive "+1" convention).
class Box {
 public:
  /// Throws DegenerateBox if w or h is not strictly positive, NonFinite if
  /// any field is NaN or infinite.
  Box(double cx, double cy, double w, double h);

  /// Corner form (x1,y1)-(x2,y2) with x1 < x2 and y1 < y2.
  static Box from_corners(double x1, double y1, double x2, double y2);

  double cx() const { return cx_; }
  double cy() const { return cy_; }
  double w() const { return w_; }
  double h() const { return h_; }

  double x1() const { return cx_ - 0.5 * w_; }
  double x2() const { return cx_ + 0.5 * w_; }
  double y1() const { return cy_ - 0.5 * h_; }
  double y2() const { return cy_ + 0.5 * h_; }

  double area() const { return w_ * h_; }

  Box translated(double tx, double ty) const { return Box(cx_ + tx, cy_ + ty, w_, h_); }
  Box scaled(double s) const { return Box(cx_ * s, cy_ * s, w_ * s, h_ * s); }

  bool operator==(const Box& o) const {
    return cx_ == o.cx_ && cy_ == o.cy_ && w_ == o.w_ && h_ == o.h_;
  }

 private:
  double cx_, cy_, w_, h_;
};

/// Shared geometric quantities of a box pair, computed once.
struct BoxPairGeometry {
  double intersection_area;  // >= 0
  double union_area;         // > 0
  double enclosing_w;        // extents of the smallest box containing both
  double enclosing_h;
  double enclosing_area;
  double center_dist_sq;     // squared distance between the two centers
  double enclosing_diag_sq;  // squared diagonal of the enclosing box
};

BoxPairGeometry pair_geometry(const Box& a, const Box& b);

/// Intersection over union, in [0, 1].
double iou(const Box& a, const Box& b);

}  // namespace boxlab
