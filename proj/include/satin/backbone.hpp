#pragma once

#include <vector>

#include "satin/nn.hpp"

namespace satin {

// Depthwise-separable residual block. Main path: pointwise (in->out, carries
// the stride) -> depthwise 3x3 -> pointwise (out->out) -> depthwise 3x3, each
// conv followed by BN+ReLU. Skip path: a strided pointwise conv with BN+ReLU.
// The paths merge by addition with no activation after the merge.
struct ResidualBlock {
  ConvBnRelu pw1, dw1, pw2, dw2, skip;

  static ResidualBlock make(ParamStore& ps, const std::string& name, int64_t in, int64_t out,
                            int64_t stride, Rng& rng);
  Var operator()(Fwd& f, Var x) const;
  int64_t param_count() const;
  int64_t macs(int64_t h, int64_t w) const;
};

// Recursive hourglass of nested residual modules. `dims[i]` is the channel
// width entering nesting level i; the nesting depth equals dims.size(). Each
// level downsamples once (stride-2 block) on the way in and upsamples
// (nearest, factor 2) on the way out, adding a full-resolution skip block,
// so the output matches the input extent and width.
struct Hourglass {
  std::vector<int64_t> dims;
  std::vector<ResidualBlock> up1s;   // dims[i] -> dims[i], stride 1 (skip)
  std::vector<ResidualBlock> low1s;  // dims[i] -> next(i), stride 2
  std::vector<ResidualBlock> low3s;  // next(i) -> dims[i], stride 1
  ResidualBlock inner;               // innermost width, stride 1

  static Hourglass make(ParamStore& ps, const std::string& name, std::vector<int64_t> dims,
                        Rng& rng);
  Var operator()(Fwd& f, Var x) const;
  int64_t param_count() const;
  int64_t macs(int64_t h, int64_t w) const;
  int64_t depth() const { return static_cast<int64_t>(dims.size()); }
};

// Siamese feature extractor: a two-conv stride-2 stem (11x11 then 5x5, each
// with BN+ReLU) followed by two stacked hourglass stages at 1/4 input
// resolution. Stage-1 output feeds auxiliary supervision and the spatial
// attention input; stage-2 is the main feature map. Both branches share this
// one instance.
struct Backbone {
  std::vector<int64_t> dims;
  ConvBnRelu stem1;  // 11x11 stride 2 pad 5, 3 -> dims[0]/2
  ConvBnRelu stem2;  // 5x5 stride 2 pad 2, dims[0]/2 -> dims[0]
  Hourglass hg1, hg2;
  ConvBnRelu inter;  // 1x1 fuse of stage-1 output before stage 2

  struct Out {
    Var stage1;
    Var stage2;
  };

  static Backbone make(ParamStore& ps, const std::string& name, std::vector<int64_t> dims,
                       Rng& rng);
  Out operator()(Fwd& f, Var image) const;
  int64_t param_count() const;
  int64_t macs(int64_t h, int64_t w) const;  // multiply-accumulates per image

  // Feature-map extent for a given input image extent (stride-4 stem).
  static int64_t feature_extent(int64_t image_extent);
};

}  // namespace satin
