#pragma once

#include "satin/attention.hpp"
#include "satin/backbone.hpp"
#include "satin/heads.hpp"

namespace satin {

struct ModelConfig {
  std::vector<int64_t> dims = {32, 64, 64, 32};  // hourglass channel schedule
  int64_t attention_ratio = 4;
  int64_t exemplar_size = 63;    // exemplar image extent (pixels, square)
  int64_t candidate_size = 127;  // candidate image extent
  bool use_attention = true;
  bool use_corner_pool = true;
  uint64_t init_seed = 1;

  // Reducers halve the channel width: all head convs run at dims[0]/2.
  int64_t head_channels() const { return dims[0] / 2; }
  // Stride from candidate-image pixels to response-map cells (stem /4,
  // reducer /2).
  int64_t stride() const { return 8; }
  int64_t kernel_extent() const;    // cropped exemplar kernel, in cells
  int64_t response_extent() const;  // response map, in cells
  // Pixel coordinate referenced by response cell 0 (kernel-center
  // convention): stride * (kernel_extent - 1) / 2.
  double origin() const { return 0.5 * double(stride() * (kernel_extent() - 1)); }

  void validate() const;
};

// The full Siamese keypoint tracker: shared backbone, exemplar-side
// attention, independent stride-2 channel-halving reducers per branch, and
// three correlation heads (two corners and a centroid). Training attaches an
// independently parameterized reducer+head set to the stage-1 features for
// auxiliary supervision; those outputs never feed the main path.
struct Model {
  ModelConfig cfg;
  ParamStore params;
  Backbone backbone;
  Attention attention;
  Conv2d ex_reducer, cand_reducer;  // 3x3 stride 2 pad 1, dims[0] -> dims[0]/2
  KeypointHead tl, br, ct;
  Conv2d aux_ex_reducer, aux_cand_reducer;
  KeypointHead aux_tl, aux_br, aux_ct;

  struct Kernels {
    KeypointHead::Kernels tl, br, ct;
  };
  struct Out {
    KeypointHead::Out tl, br, ct;
    KeypointHead::Out aux_tl, aux_br, aux_ct;  // defined only with aux=true
  };

  explicit Model(ModelConfig cfg);
  Model(const Model&) = delete;

  // Exemplar pipeline: backbone -> attention -> reducer -> per-head kernels.
  Kernels exemplar_kernels(Fwd& f, Var exemplar_image) const;
  // Candidate pipeline against prepared kernels (main heads only).
  Out respond(Fwd& f, Var candidate_image, const Kernels& k) const;
  // Full training/inference pass over one image pair.
  Out forward(Fwd& f, Var exemplar_image, Var candidate_image, bool aux) const;

  int64_t param_total() const;  // trainable parameter count
};

// Per-module parameter and multiply-accumulate audit. MACs cover one
// exemplar + candidate forward pass including the correlations; the aux row
// counts the training-only stage-1 path.
struct ModelReport {
  struct Row {
    std::string name;
    int64_t params = 0;
    int64_t macs = 0;
  };
  std::vector<Row> rows;
  int64_t total_params = 0;
  int64_t total_macs = 0;
};
ModelReport model_report(const Model& m);

}  // namespace satin
