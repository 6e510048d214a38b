#include "satin/box.hpp"

#include <algorithm>
#include <cmath>

namespace satin {

double iou(const Box& a, const Box& b) {
  double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (iw <= 0 || ih <= 0) return 0.0;
  double inter = iw * ih;
  double areas = std::max(0.0, a.w()) * std::max(0.0, a.h()) +
                 std::max(0.0, b.w()) * std::max(0.0, b.h());
  double uni = areas - inter;
  return uni > 0 ? inter / uni : 0.0;
}

Assembled assemble_box(const Pt& tl, const Pt& c, const Pt& br, const Box& prev, double tol) {
  auto finite = [](const Pt& p) { return std::isfinite(p.x) && std::isfinite(p.y); };

  if (finite(tl) && finite(br) && br.x > tl.x && br.y > tl.y) {
    double mx = 0.5 * (tl.x + br.x), my = 0.5 * (tl.y + br.y);
    double diag = std::hypot(br.x - tl.x, br.y - tl.y);
    if (finite(c) && std::hypot(mx - c.x, my - c.y) <= tol * diag)
      return {Box{tl.x, tl.y, br.x, br.y}, true, false};
  }
  if (finite(c)) return {Box::from_center(c.x, c.y, prev.w(), prev.h()), false, false};
  return {prev, false, true};
}

}  // namespace satin
