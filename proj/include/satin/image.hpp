#pragma once

#include "satin/box.hpp"
#include "satin/tensor.hpp"

namespace satin {

// Images are (3,H,W) tensors with values in [0,1].

// Bilinear resize; output pixel i samples source coordinate
// (i + 0.5) * scale - 0.5, clamped at the border.
Tensor bilinear_resize(const Tensor& img, int64_t out_h, int64_t out_w);

// Affine map between frame pixels and patch pixels (independent x/y scales).
struct AffineMap {
  double cx = 0, cy = 0;    // window center, frame pixels
  double sx = 1, sy = 1;    // patch pixels per frame pixel
  int64_t out_size = 0;

  double to_patch_x(double fx) const { return (fx - cx) * sx + 0.5 * (out_size - 1); }
  double to_patch_y(double fy) const { return (fy - cy) * sy + 0.5 * (out_size - 1); }
  double to_frame_x(double px) const { return (px - 0.5 * (out_size - 1)) / sx + cx; }
  double to_frame_y(double py) const { return (py - 0.5 * (out_size - 1)) / sy + cy; }

  Box to_patch(const Box& b) const;
  Box to_frame(const Box& b) const;
};

// Cuts the window centered on `box` with side lengths (factor*w, factor*h),
// mean-fills samples outside the frame (per-channel frame mean), and
// bilinearly resizes to out_size x out_size. `scale_jitter` multiplies both
// window sides (1 = none). Returns the patch and its affine mapping.
struct CropResult {
  Tensor patch;
  AffineMap map;
};
CropResult crop_and_resize(const Tensor& frame, const Box& box, double factor, int64_t out_size,
                           double scale_jitter = 1.0, double center_dx = 0.0,
                           double center_dy = 0.0);

}  // namespace satin
