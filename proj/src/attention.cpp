#include "satin/attention.hpp"

namespace satin {

using namespace ops;

Attention Attention::make(ParamStore& ps, const std::string& name, int64_t channels,
                          int64_t ratio, Rng& rng) {
  check(channels % ratio == 0, "attention channels must be divisible by the reduction ratio");
  Attention a;
  a.spatial_conv =
      Conv2d::make(ps, name + ".spatial", ConvSpec{7, 7, 1, 3, 2, 1}, true, rng);
  int64_t mid = channels / ratio;
  a.down = Conv2d::make(ps, name + ".down",
                        ConvSpec{1, 1, 1, 0, channels, mid, ConvMode::pointwise}, true, rng);
  a.up = Conv2d::make(ps, name + ".up", ConvSpec{1, 1, 1, 0, mid, channels, ConvMode::pointwise},
                      false, rng);
  return a;
}

Var Attention::spatial_gate(Fwd& f, Var stage1) const {
  Var avg = reduce_channel(stage1, Reduce::avg);
  Var mx = reduce_channel(stage1, Reduce::max);
  return sigmoid(spatial_conv(f, concat_channels(avg, mx)));
}

Var Attention::channel_gate(Fwd& f, Var stage2) const {
  Var avg = reduce_spatial(stage2, Reduce::avg);
  Var mx = reduce_spatial(stage2, Reduce::max);
  Var a = up(f, relu(down(f, avg)));
  Var m = up(f, relu(down(f, mx)));
  return sigmoid(add(a, m));
}

Var Attention::operator()(Fwd& f, Var stage1, Var stage2) const {
  Var gated = mul(mul(stage2, spatial_gate(f, stage1)), channel_gate(f, stage2));
  return add(stage2, gated);
}

int64_t Attention::macs(int64_t h, int64_t w) const {
  // The channel gate runs on pooled (C,1,1) vectors, twice each projection.
  return spatial_conv.macs(h, w) + 2 * (down.macs(1, 1) + up.macs(1, 1)) + 2 * h * w;
}

int64_t Attention::param_count() const {
  return spatial_conv.param_count() + down.param_count() + up.param_count();
}

}  // namespace satin
