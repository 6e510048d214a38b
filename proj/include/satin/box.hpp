#pragma once

namespace satin {

// Axis-aligned box in pixel coordinates; x spans [x0, x1], y spans [y0, y1].
struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double w() const { return x1 - x0; }
  double h() const { return y1 - y0; }
  double cx() const { return 0.5 * (x0 + x1); }
  double cy() const { return 0.5 * (y0 + y1); }

  static Box from_xywh(double x, double y, double w, double h) {
    return Box{x, y, x + w, y + h};
  }
  static Box from_center(double cx, double cy, double w, double h) {
    return Box{cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
  }
};

double iou(const Box& a, const Box& b);

struct Pt {
  double x = 0, y = 0;
};

// Combines the three decoded keypoints into a box. The corner pair is
// accepted when the bottom-right point lies strictly below-right of the
// top-left one and their midpoint lies within tol * corner-diagonal of the
// centroid detection; otherwise the box is re-centered on the centroid with
// the previous size. If the centroid is unusable too, the previous box is
// returned with the degenerate flag set.
struct Assembled {
  Box box;
  bool used_corners = false;
  bool degenerate = false;
};
Assembled assemble_box(const Pt& tl, const Pt& c, const Pt& br, const Box& prev, double tol);

}  // namespace satin
