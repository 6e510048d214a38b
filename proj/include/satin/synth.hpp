#pragma once

#include "satin/image.hpp"
#include "satin/rng.hpp"

namespace satin {

struct SynthConfig {
  int64_t frames = 60;
  int64_t width = 240;
  int64_t height = 180;
  double min_box = 28;
  double max_box = 52;
  uint64_t seed = 1;
};

// A procedurally generated clip: a high-contrast checker-textured rectangle
// following a smooth sinusoidal trajectory over a low-contrast shaded
// background, with mild size oscillation. Deterministic in (seed, index).
struct SynthVideo {
  SynthConfig cfg;

  // background shading
  double base[3];
  double amp[3][2], fx[3][2], fy[3][2], phase[3][2];
  // target appearance
  double color_a[3], color_b[3];
  double checker = 8;  // checker period in pixels
  // trajectory
  double cx0, cy0, ax[2], ay[2], wx[2], wy_[2], px_[2], py_[2];
  double w0, h0, size_amp, size_w, size_phase;

  static SynthVideo sample(const SynthConfig& cfg, uint64_t index);

  Box gt(int64_t t) const;
  Tensor render(int64_t t) const;  // (3,H,W)
};

// One training example cut from a synthetic clip.
struct PairSample {
  Tensor exemplar;   // (3,E,E)
  Tensor candidate;  // (3,Q,Q)
  Box gt;            // target box in candidate-patch pixels
};

// Crop geometry shared with the tracker: the exemplar window covers
// exemplar_factor times the box in each dimension, the candidate window
// candidate_factor times. Training jitters the candidate crop center by a
// uniform frame-pixel offset and its window scale log-uniformly.
struct CropConfig {
  double exemplar_factor = 2.0;
  double candidate_factor = 4.0;
  int64_t exemplar_size = 63;
  int64_t candidate_size = 127;
  double center_jitter = 12;   // frame pixels, each axis
  double scale_jitter = 0.25;  // log2 half-range
  int64_t max_gap = 99;        // max frame distance within a pair
};

PairSample make_pair(const SynthVideo& video, const CropConfig& crop, Rng& rng);

}  // namespace satin
