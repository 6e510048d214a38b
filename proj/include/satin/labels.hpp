#pragma once

#include "satin/box.hpp"
#include "satin/model.hpp"

namespace satin {

// Largest integer r such that displacing each of the two defining corners of
// a w-by-h box (cell units) by any integer vector of Euclidean norm <= r
// keeps the IoU with the original box at or above `thresh`. Computed by
// exhaustive scan over the lattice discs; the scan walks r upward and stops
// at the first violating displacement pair.
int64_t radius_for_box(double w, double h, double thresh = 0.7);

// Unnormalized Gaussian label map over an extent-by-extent cell grid: peak 1
// at (row, col), sigma = radius / 3, zero beyond Euclidean distance radius.
// radius <= 0 degenerates to a one-hot map.
Tensor gaussian_label(int64_t extent, int64_t row, int64_t col, int64_t radius);

// A keypoint's position on the response-map grid: integer cell plus the
// fractional remainder lost to the cell quantization.
struct CellTarget {
  int64_t row = 0, col = 0;
  double off_r = 0, off_c = 0;
};

// pixel -> cell: u = (pixel - origin) / stride, cell = floor(u), offset =
// u - cell. The cell is clamped to [0, extent-1]; the offsets keep the exact
// remainder relative to the clamped cell so decode can invert the encoding.
CellTarget encode_point(double row_px, double col_px, double stride, double origin,
                        int64_t extent);

// Argmax decode: scans the (1,H,W) heatmap in row-major order keeping the
// first strict maximum (ties resolve to the smallest row, then column),
// reads the offset pair at that cell, and maps to pixels:
// p = stride * (cell + offset) + origin. Returns (row_px, col_px).
// Non-finite heatmap values are rejected.
struct Peak {
  int64_t row = 0, col = 0;  // argmax cell
  double score = 0;
  double row_px = 0, col_px = 0;
};
Peak decode_peak(const Tensor& heatmap, const Tensor& offsets, double stride, double origin);

// Per-keypoint training target.
struct KeypointTarget {
  Tensor label;  // (1,E,E) Gaussian map
  CellTarget cell;
};

// Targets for the three keypoint heads of one training pair; the shared
// Gaussian radius comes from the box size measured in response cells.
struct PairTargets {
  KeypointTarget tl, br, ct;
};
PairTargets make_targets(const Box& gt, double stride, double origin, int64_t extent);

// Heatmap loss over one sigmoid score map s against soft labels y:
//   L = -sum[ y*(1-s)*log s + s*(1-y)*log(1-s) ]
// with s clamped into [eps, 1-eps], eps = 1e-7.
Var heatmap_loss(Var heatmap, const Tensor& label);

// Smooth-L1 between the predicted offset pair read at the ground-truth cell
// and the fractional target; summed over the two components.
Var offset_loss(Var offsets, const CellTarget& t);

// Geometric-consistency loss on soft-argmax coordinates (m1,n1)=top-left,
// (m2,n2)=centroid, (m3,n3)=bottom-right:
//   L = |(m2-m1) - (m3-m2)| + |(n2-n1) - (n3-n2)|
Var symmetry_loss(Var tl_heat, Var ct_heat, Var br_heat);

struct LossWeights {
  double offset = 1.0;    // lambda1
  double symmetry = 10.0; // lambda2
};

struct LossBreakdown {
  Var total;
  double heatmap = 0, offset = 0, symmetry = 0;
};

// Combined loss L_hm + lambda1*L_os + lambda2*L_st for one forward pass,
// summing the three keypoint maps. With aux=true the stage-1 head outputs
// contribute an equally weighted second copy of all terms.
LossBreakdown pair_loss(const Model::Out& out, const PairTargets& t, const LossWeights& w,
                        bool aux);

}  // namespace satin
