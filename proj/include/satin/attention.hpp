#pragma once

#include "satin/nn.hpp"

namespace satin {

// Cross-feature attention applied to the exemplar branch. The spatial gate
// comes from the low-level stage-1 map, the channel gate from the high-level
// stage-2 map, and both modulate stage-2 with a residual bring-back:
//   spatial: sigmoid(conv7x7(concat(channel-avg(s1), channel-max(s1))))  (1,H,W)
//   channel: sigmoid(mlp(spatial-avg(s2)) + mlp(spatial-max(s2)))        (C,1,1)
//   output:  s2 + s2 * spatial * channel
// The two mlp branches share the down projection (with bias) and the up
// projection (no bias), with reduction ratio r.
struct Attention {
  Conv2d spatial_conv;  // 7x7 pad 3, 2 -> 1, bias
  Conv2d down;          // 1x1, C -> C/r, bias
  Conv2d up;            // 1x1, C/r -> C, no bias

  static Attention make(ParamStore& ps, const std::string& name, int64_t channels, int64_t ratio,
                        Rng& rng);
  Var operator()(Fwd& f, Var stage1, Var stage2) const;

  // Gate maps exposed for inspection and ablation tests.
  Var spatial_gate(Fwd& f, Var stage1) const;
  Var channel_gate(Fwd& f, Var stage2) const;

  int64_t param_count() const;
  int64_t macs(int64_t h, int64_t w) const;
};

}  // namespace satin
