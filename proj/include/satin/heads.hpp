#pragma once

#include "satin/nn.hpp"

namespace satin {

enum class Keypoint { top_left, centroid, bottom_right };

// Keypoint-specific feature assembly on one branch, all plain convs (no
// BN/activation): post3x3(corner_pool(orient_a3x3(f), orient_b3x3(f))) +
// resid1x1(f). The centroid variant (and the pooling-ablated variant) drops
// the pooling and the second orientation conv.
struct KeypointFeature {
  Keypoint kind = Keypoint::centroid;
  bool pool = false;
  Conv2d orient_a, orient_b, post, resid;

  static KeypointFeature make(ParamStore& ps, const std::string& name, int64_t channels,
                              Keypoint kind, bool pool, Rng& rng);
  Var operator()(Fwd& f, Var x) const;
  int64_t param_count() const;
  int64_t macs(int64_t h, int64_t w) const;
};

// Keypoint-dependent half crop of an exemplar feature map: the top-left
// keypoint keeps the top-left quadrant, bottom-right the bottom-right
// quadrant, and the centroid a centered window of half extent.
Var quarter_crop(Var x, Keypoint kind);

// One keypoint detector. Exemplar side: feature assembly, then a score conv
// (keep channels) and an offset conv (double channels), then the keypoint's
// quarter crop — producing correlation kernels. Candidate side: feature
// assembly plus score/offset convs, both keeping channels. Outputs:
//   heatmap  = sigmoid(corr(score_map, score_kernel, groups=1) / K + b)
//   offsets  =        corr(offset_map, offset_kernel, groups=2) / K + b2
// K is the score kernel's element count; the 1/K scale and learnable biases
// keep the sigmoid out of saturation at initialization.
struct KeypointHead {
  Keypoint kind = Keypoint::centroid;
  KeypointFeature ex_feat, cand_feat;
  Conv2d ex_score, ex_offset;      // 3x3, C -> C and C -> 2C
  Conv2d cand_score, cand_offset;  // 3x3, C -> C each
  Param* heat_gain = nullptr;      // (1,1,1)
  Param* heat_bias = nullptr;      // (1,1,1)
  Param* off_bias = nullptr;       // (2,1,1)

  struct Kernels {
    Var score;   // (C, k, k)
    Var offset;  // (2C, k, k)
  };
  struct Out {
    Var heatmap;  // (1,H,W), strictly in (0,1)
    Var offsets;  // (2,H,W): row, col in cell units
  };

  static KeypointHead make(ParamStore& ps, const std::string& name, int64_t channels,
                           Keypoint kind, bool pool, Rng& rng);

  Kernels kernels(Fwd& f, Var exemplar_features) const;
  Out respond(Fwd& f, Var candidate_features, const Kernels& k) const;
  Out operator()(Fwd& f, Var exemplar_features, Var candidate_features) const;

  int64_t param_count() const;
  // Per-pair multiply-accumulates at the given reduced exemplar and
  // candidate feature extents (correlations included).
  int64_t macs(int64_t ex_extent, int64_t cand_extent) const;
};

}  // namespace satin
