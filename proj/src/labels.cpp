#include "satin/labels.hpp"

#include <algorithm>
#include <cmath>

namespace satin {

using namespace ops;

namespace {

// Integer lattice points with Euclidean norm <= r.
std::vector<std::pair<int64_t, int64_t>> disc_points(int64_t r) {
  std::vector<std::pair<int64_t, int64_t>> pts;
  for (int64_t dx = -r; dx <= r; ++dx)
    for (int64_t dy = -r; dy <= r; ++dy)
      if (dx * dx + dy * dy <= r * r) pts.emplace_back(dx, dy);
  return pts;
}

bool radius_ok(double w, double h, int64_t r, double thresh) {
  Box ref{0, 0, w, h};
  auto pts = disc_points(r);
  for (auto [dx1, dy1] : pts)
    for (auto [dx2, dy2] : pts) {
      Box moved{double(dx1), double(dy1), w + double(dx2), h + double(dy2)};
      if (iou(ref, moved) < thresh) return false;
    }
  return true;
}

}  // namespace

int64_t radius_for_box(double w, double h, double thresh) {
  check(w > 0 && h > 0, "radius_for_box: box must have positive extent");
  int64_t r = 0;
  while (radius_ok(w, h, r + 1, thresh)) ++r;
  return r;
}

Tensor gaussian_label(int64_t extent, int64_t row, int64_t col, int64_t radius) {
  check(row >= 0 && row < extent && col >= 0 && col < extent,
        "gaussian_label: peak outside the map");
  Tensor out({1, extent, extent}, 0.0);
  if (radius <= 0) {
    out.at(0, row, col) = 1.0;
    return out;
  }
  double sigma = double(radius) / 3.0;
  for (int64_t r = 0; r < extent; ++r)
    for (int64_t c = 0; c < extent; ++c) {
      double d2 = double((r - row) * (r - row) + (c - col) * (c - col));
      if (d2 > double(radius) * double(radius)) continue;  // zero beyond the radius
      out.at(0, r, c) = std::exp(-d2 / (2.0 * sigma * sigma));
    }
  out.at(0, row, col) = 1.0;
  return out;
}

CellTarget encode_point(double row_px, double col_px, double stride, double origin,
                        int64_t extent) {
  CellTarget t;
  double ur = (row_px - origin) / stride;
  double uc = (col_px - origin) / stride;
  t.row = std::clamp<int64_t>(int64_t(std::floor(ur)), 0, extent - 1);
  t.col = std::clamp<int64_t>(int64_t(std::floor(uc)), 0, extent - 1);
  t.off_r = ur - double(t.row);
  t.off_c = uc - double(t.col);
  return t;
}

Peak decode_peak(const Tensor& heatmap, const Tensor& offsets, double stride, double origin) {
  check(heatmap.rank() == 3 && heatmap.extent(0) == 1, "decode_peak: heatmap must be (1,H,W)");
  check(offsets.rank() == 3 && offsets.extent(0) == 2, "decode_peak: offsets must be (2,H,W)");
  int64_t H = heatmap.extent(1), W = heatmap.extent(2);
  Peak p;
  p.score = heatmap.at(0, 0, 0);
  for (int64_t r = 0; r < H; ++r)
    for (int64_t c = 0; c < W; ++c) {
      double v = heatmap.at(0, r, c);
      check(std::isfinite(v), "decode_peak: non-finite heatmap value");
      if (v > p.score) {
        p.score = v;
        p.row = r;
        p.col = c;
      }
    }
  p.row_px = stride * (double(p.row) + offsets.at(0, p.row, p.col)) + origin;
  p.col_px = stride * (double(p.col) + offsets.at(1, p.row, p.col)) + origin;
  return p;
}

PairTargets make_targets(const Box& gt, double stride, double origin, int64_t extent) {
  double wc = std::max(gt.w() / stride, 1.0);
  double hc = std::max(gt.h() / stride, 1.0);
  int64_t radius = radius_for_box(wc, hc);
  auto one = [&](double row_px, double col_px) {
    KeypointTarget t;
    t.cell = encode_point(row_px, col_px, stride, origin, extent);
    t.label = gaussian_label(extent, t.cell.row, t.cell.col, radius);
    return t;
  };
  PairTargets out;
  out.tl = one(gt.y0, gt.x0);
  out.br = one(gt.y1, gt.x1);
  out.ct = one(gt.cy(), gt.cx());
  return out;
}

Var heatmap_loss(Var heatmap, const Tensor& label) {
  Tape& t = *heatmap.tape;
  constexpr double kEps = 1e-7;
  Var s = clamp(heatmap, kEps, 1.0 - kEps);
  Var y = leaf(t, label);
  Var one = leaf(t, Tensor({1, 1, 1}, 1.0));
  Var pos = mul(mul(y, sub(one, s)), log_(s));
  Var neg = mul(mul(s, sub(one, y)), log_(sub(one, s)));
  return scale(sum_all(add(pos, neg)), -1.0);
}

Var offset_loss(Var offsets, const CellTarget& t) {
  Tape& tape = *offsets.tape;
  Var at = crop(offsets, t.row, t.row + 1, t.col, t.col + 1);  // (2,1,1)
  Tensor target({2, 1, 1}, {t.off_r, t.off_c});
  return sum_all(smooth_l1(sub(at, leaf(tape, target))));
}

Var symmetry_loss(Var tl_heat, Var ct_heat, Var br_heat) {
  auto [m1, n1] = soft_argmax(tl_heat);
  auto [m2, n2] = soft_argmax(ct_heat);
  auto [m3, n3] = soft_argmax(br_heat);
  Var row_term = abs_(sub(sub(m2, m1), sub(m3, m2)));
  Var col_term = abs_(sub(sub(n2, n1), sub(n3, n2)));
  return add(row_term, col_term);
}

LossBreakdown pair_loss(const Model::Out& out, const PairTargets& t, const LossWeights& w,
                        bool aux) {
  auto stage = [&](const KeypointHead::Out& tl, const KeypointHead::Out& br,
                   const KeypointHead::Out& ct, Var& hm, Var& os, Var& st) {
    hm = add(add(heatmap_loss(tl.heatmap, t.tl.label), heatmap_loss(br.heatmap, t.br.label)),
             heatmap_loss(ct.heatmap, t.ct.label));
    os = add(add(offset_loss(tl.offsets, t.tl.cell), offset_loss(br.offsets, t.br.cell)),
             offset_loss(ct.offsets, t.ct.cell));
    st = symmetry_loss(tl.heatmap, ct.heatmap, br.heatmap);
  };

  Var hm, os, st;
  stage(out.tl, out.br, out.ct, hm, os, st);
  if (aux) {
    Var ahm, aos, ast;
    stage(out.aux_tl, out.aux_br, out.aux_ct, ahm, aos, ast);
    hm = add(hm, ahm);
    os = add(os, aos);
    st = add(st, ast);
  }

  LossBreakdown b;
  b.heatmap = hm.val().item();
  b.offset = os.val().item();
  b.symmetry = st.val().item();
  b.total = add(add(hm, scale(os, w.offset)), scale(st, w.symmetry));
  return b;
}

}  // namespace satin
