#pragma once

#include "satin/image.hpp"
#include "satin/model.hpp"

namespace satin {

struct TrackerConfig {
  double exemplar_factor = 2.0;   // crop window sides as multiples of the box
  double candidate_factor = 4.0;  // must match training
  double corner_tol = 0.5;        // corner/centroid agreement, see assemble_box
};

// Single-object tracker around a trained model. init() runs the exemplar
// branch once and caches the correlation kernels; update() localizes the
// target in each later frame by decoding the three keypoint heatmaps inside
// a search window centered on the previous estimate, with no temporal box
// smoothing.
class Tracker {
 public:
  Tracker(const Model& model, TrackerConfig cfg);

  void init(const Tensor& image, const Box& box);
  Box update(const Tensor& image);

  const Box& box() const { return box_; }
  double last_score() const { return last_score_; }
  bool last_degenerate() const { return last_degenerate_; }

 private:
  const Model& model_;
  TrackerConfig cfg_;
  struct CachedKernels {
    Tensor tl_score, tl_offset, br_score, br_offset, ct_score, ct_offset;
  } kernels_;
  Box box_;
  double last_score_ = 0;
  bool last_degenerate_ = false;
};

}  // namespace satin
