#include "satin/synth.hpp"

#include <algorithm>
#include <cmath>

namespace satin {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

SynthVideo SynthVideo::sample(const SynthConfig& cfg, uint64_t index) {
  Rng rng(Rng::mix(cfg.seed, index));
  SynthVideo v;
  v.cfg = cfg;

  for (int c = 0; c < 3; ++c) {
    v.base[c] = rng.uniform(0.35, 0.65);
    for (int k = 0; k < 2; ++k) {
      v.amp[c][k] = rng.uniform(0.02, 0.07);
      v.fx[c][k] = rng.uniform(0.02, 0.12);
      v.fy[c][k] = rng.uniform(0.02, 0.12);
      v.phase[c][k] = rng.uniform(0.0, 2 * kPi);
    }
  }

  // two far-apart, saturated checker colors
  for (int c = 0; c < 3; ++c) {
    double a = rng.uniform() < 0.5 ? rng.uniform(0.0, 0.15) : rng.uniform(0.85, 1.0);
    v.color_a[c] = a;
    v.color_b[c] = a < 0.5 ? rng.uniform(0.85, 1.0) : rng.uniform(0.0, 0.15);
  }
  v.checker = rng.uniform(6.0, 14.0);

  v.w0 = rng.uniform(cfg.min_box, cfg.max_box);
  v.h0 = v.w0 * rng.uniform(0.75, 1.33);
  v.h0 = std::clamp(v.h0, cfg.min_box, cfg.max_box);
  v.size_amp = rng.uniform(0.0, 0.12);
  v.size_w = rng.uniform(2 * kPi / 80.0, 2 * kPi / 30.0);
  v.size_phase = rng.uniform(0.0, 2 * kPi);

  // keep the full oscillation inside the frame with a safety margin
  double margin_x = 0.75 * cfg.max_box, margin_y = 0.75 * cfg.max_box;
  double span_x = std::max(4.0, 0.5 * (cfg.width - 2 * margin_x));
  double span_y = std::max(4.0, 0.5 * (cfg.height - 2 * margin_y));
  v.cx0 = cfg.width / 2.0 + rng.uniform(-0.2, 0.2) * span_x;
  v.cy0 = cfg.height / 2.0 + rng.uniform(-0.2, 0.2) * span_y;
  for (int k = 0; k < 2; ++k) {
    v.ax[k] = rng.uniform(0.15, 0.4) * span_x;
    v.ay[k] = rng.uniform(0.15, 0.4) * span_y;
    v.wx[k] = rng.uniform(2 * kPi / 90.0, 2 * kPi / 25.0);
    v.wy_[k] = rng.uniform(2 * kPi / 90.0, 2 * kPi / 25.0);
    v.px_[k] = rng.uniform(0.0, 2 * kPi);
    v.py_[k] = rng.uniform(0.0, 2 * kPi);
  }
  return v;
}

Box SynthVideo::gt(int64_t t) const {
  double cx = cx0, cy = cy0;
  for (int k = 0; k < 2; ++k) {
    cx += ax[k] * std::sin(wx[k] * t + px_[k]);
    cy += ay[k] * std::sin(wy_[k] * t + py_[k]);
  }
  double s = 1.0 + size_amp * std::sin(size_w * t + size_phase);
  double w = w0 * s, h = h0 * s;
  cx = std::clamp(cx, 0.6 * w, cfg.width - 0.6 * w);
  cy = std::clamp(cy, 0.6 * h, cfg.height - 0.6 * h);
  return Box{cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
}

Tensor SynthVideo::render(int64_t t) const {
  Box b = gt(t);
  Tensor img({3, cfg.height, cfg.width});
  for (int64_t y = 0; y < cfg.height; ++y)
    for (int64_t x = 0; x < cfg.width; ++x) {
      // pixel square [x-0.5, x+0.5] overlap with the target box
      double ox = std::min(b.x1, x + 0.5) - std::max(b.x0, x - 0.5);
      double oy = std::min(b.y1, y + 0.5) - std::max(b.y0, y - 0.5);
      double cov = std::clamp(ox, 0.0, 1.0) * std::clamp(oy, 0.0, 1.0);
      // target-local checker cell
      double u = (x - b.x0) / checker, w = (y - b.y0) / checker;
      bool odd = (int64_t(std::floor(u)) + int64_t(std::floor(w))) & 1;
      for (int c = 0; c < 3; ++c) {
        double bg = base[c];
        for (int k = 0; k < 2; ++k)
          bg += amp[c][k] * std::sin(fx[c][k] * x + fy[c][k] * y + phase[c][k]);
        double fg = odd ? color_b[c] : color_a[c];
        img.at(c, y, x) = std::clamp((1 - cov) * bg + cov * fg, 0.0, 1.0);
      }
    }
  return img;
}

PairSample make_pair(const SynthVideo& video, const CropConfig& crop, Rng& rng) {
  int64_t n = video.cfg.frames;
  check(n >= 2, "make_pair: clip too short");
  int64_t max_gap = std::min<int64_t>(crop.max_gap, n - 1);
  int64_t t1 = rng.uniform_int(n);
  int64_t gap = 1 + rng.uniform_int(max_gap);
  int64_t t2 = t1 + gap;
  if (t2 >= n) {
    t2 = t1;
    t1 = std::max<int64_t>(0, t2 - gap);
    if (t1 == t2) t2 = t1 + 1;
  }

  Box b1 = video.gt(t1), b2 = video.gt(t2);
  Tensor f1 = video.render(t1), f2 = video.render(t2);

  PairSample s;
  s.exemplar =
      crop_and_resize(f1, b1, crop.exemplar_factor, crop.exemplar_size).patch;

  double dx = rng.uniform(-crop.center_jitter, crop.center_jitter);
  double dy = rng.uniform(-crop.center_jitter, crop.center_jitter);
  double sj = std::exp2(rng.uniform(-crop.scale_jitter, crop.scale_jitter));
  CropResult cand =
      crop_and_resize(f2, b2, crop.candidate_factor, crop.candidate_size, sj, dx, dy);
  s.candidate = std::move(cand.patch);
  s.gt = cand.map.to_patch(b2);
  return s;
}

}  // namespace satin
