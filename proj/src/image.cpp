#include "satin/image.hpp"

#include <algorithm>
#include <cmath>

namespace satin {

Tensor bilinear_resize(const Tensor& img, int64_t out_h, int64_t out_w) {
  check(img.rank() == 3, "bilinear_resize: expected (C,H,W)");
  check(out_h > 0 && out_w > 0, "bilinear_resize: bad output extents");
  int64_t C = img.extent(0), H = img.extent(1), W = img.extent(2);
  Tensor out({C, out_h, out_w});
  double sy = double(H) / double(out_h), sx = double(W) / double(out_w);
  for (int64_t oh = 0; oh < out_h; ++oh) {
    double fy = std::clamp((oh + 0.5) * sy - 0.5, 0.0, double(H - 1));
    int64_t y0 = int64_t(fy);
    int64_t y1 = std::min(y0 + 1, H - 1);
    double wy = fy - y0;
    for (int64_t ow = 0; ow < out_w; ++ow) {
      double fx = std::clamp((ow + 0.5) * sx - 0.5, 0.0, double(W - 1));
      int64_t x0 = int64_t(fx);
      int64_t x1 = std::min(x0 + 1, W - 1);
      double wx = fx - x0;
      for (int64_t c = 0; c < C; ++c) {
        double top = (1 - wx) * img.at(c, y0, x0) + wx * img.at(c, y0, x1);
        double bot = (1 - wx) * img.at(c, y1, x0) + wx * img.at(c, y1, x1);
        out.at(c, oh, ow) = (1 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

Box AffineMap::to_patch(const Box& b) const {
  return Box{to_patch_x(b.x0), to_patch_y(b.y0), to_patch_x(b.x1), to_patch_y(b.y1)};
}

Box AffineMap::to_frame(const Box& b) const {
  return Box{to_frame_x(b.x0), to_frame_y(b.y0), to_frame_x(b.x1), to_frame_y(b.y1)};
}

CropResult crop_and_resize(const Tensor& frame, const Box& box, double factor, int64_t out_size,
                           double scale_jitter, double center_dx, double center_dy) {
  check(frame.rank() == 3 && frame.size() > 0, "crop_and_resize: empty frame");
  check(box.w() > 0 && box.h() > 0, "crop_and_resize: box must have positive extent");
  check(factor > 0 && scale_jitter > 0, "crop_and_resize: bad factor");
  int64_t C = frame.extent(0), H = frame.extent(1), W = frame.extent(2);

  std::vector<double> mean(C, 0.0);
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t i = 0; i < H * W; ++i) mean[c] += frame.data()[c * H * W + i];
    mean[c] /= double(H * W);
  }

  AffineMap m;
  m.cx = box.cx() + center_dx;
  m.cy = box.cy() + center_dy;
  m.sx = double(out_size) / (factor * box.w() * scale_jitter);
  m.sy = double(out_size) / (factor * box.h() * scale_jitter);
  m.out_size = out_size;

  Tensor out({C, out_size, out_size});
  for (int64_t oh = 0; oh < out_size; ++oh) {
    double fy = m.to_frame_y(double(oh));
    for (int64_t ow = 0; ow < out_size; ++ow) {
      double fx = m.to_frame_x(double(ow));
      int64_t y0 = int64_t(std::floor(fy)), x0 = int64_t(std::floor(fx));
      double wy = fy - y0, wx = fx - x0;
      for (int64_t c = 0; c < C; ++c) {
        auto px = [&](int64_t y, int64_t x) {
          if (y < 0 || y >= H || x < 0 || x >= W) return mean[c];
          return frame.at(c, y, x);
        };
        double top = (1 - wx) * px(y0, x0) + wx * px(y0, x0 + 1);
        double bot = (1 - wx) * px(y0 + 1, x0) + wx * px(y0 + 1, x0 + 1);
        out.at(c, oh, ow) = (1 - wy) * top + wy * bot;
      }
    }
  }
  return {std::move(out), m};
}

}  // namespace satin
