#include "satin/backbone.hpp"

namespace satin {

using namespace ops;

namespace {

ConvSpec pointwise(int64_t in, int64_t out, int64_t stride) {
  return ConvSpec{1, 1, stride, 0, in, out, ConvMode::pointwise};
}

ConvSpec depthwise3(int64_t ch) {
  return ConvSpec{3, 3, 1, 1, ch, ch, ConvMode::depthwise};
}

}  // namespace

ResidualBlock ResidualBlock::make(ParamStore& ps, const std::string& name, int64_t in,
                                  int64_t out, int64_t stride, Rng& rng) {
  ResidualBlock b;
  b.pw1 = ConvBnRelu::make(ps, name + ".pw1", pointwise(in, out, stride), rng);
  b.dw1 = ConvBnRelu::make(ps, name + ".dw1", depthwise3(out), rng);
  b.pw2 = ConvBnRelu::make(ps, name + ".pw2", pointwise(out, out, 1), rng);
  b.dw2 = ConvBnRelu::make(ps, name + ".dw2", depthwise3(out), rng);
  b.skip = ConvBnRelu::make(ps, name + ".skip", pointwise(in, out, stride), rng);
  return b;
}

Var ResidualBlock::operator()(Fwd& f, Var x) const {
  Var main = dw2(f, pw2(f, dw1(f, pw1(f, x))));
  return add(main, skip(f, x));
}

int64_t ResidualBlock::param_count() const {
  return pw1.param_count() + dw1.param_count() + pw2.param_count() + dw2.param_count() +
         skip.param_count();
}

int64_t ResidualBlock::macs(int64_t h, int64_t w) const {
  auto [oh, ow] = pw1.conv.out_hw(h, w);
  return pw1.conv.macs(h, w) + dw1.conv.macs(oh, ow) + pw2.conv.macs(oh, ow) +
         dw2.conv.macs(oh, ow) + skip.conv.macs(h, w);
}

Hourglass Hourglass::make(ParamStore& ps, const std::string& name, std::vector<int64_t> dims,
                          Rng& rng) {
  check(!dims.empty(), "hourglass needs at least one channel width");
  Hourglass h;
  h.dims = dims;
  int64_t levels = static_cast<int64_t>(dims.size());
  for (int64_t i = 0; i < levels; ++i) {
    int64_t curr = dims[i];
    int64_t next = dims[std::min<size_t>(i + 1, dims.size() - 1)];
    std::string lv = name + ".l" + std::to_string(i);
    h.up1s.push_back(ResidualBlock::make(ps, lv + ".up1", curr, curr, 1, rng));
    h.low1s.push_back(ResidualBlock::make(ps, lv + ".low1", curr, next, 2, rng));
    h.low3s.push_back(ResidualBlock::make(ps, lv + ".low3", next, curr, 1, rng));
  }
  h.inner = ResidualBlock::make(ps, name + ".inner", dims.back(), dims.back(), 1, rng);
  return h;
}

Var Hourglass::operator()(Fwd& f, Var x) const {
  int64_t e = x.val().extent(1), e2 = x.val().extent(2);
  int64_t div = int64_t(1) << depth();
  if (e % div != 0 || e2 % div != 0)
    fail("hourglass: input extent " + std::to_string(e) + "x" + std::to_string(e2) +
         " not divisible by 2^" + std::to_string(depth()) + "; pad to a multiple of " +
         std::to_string(div));
  std::function<Var(int64_t, Var)> level = [&](int64_t i, Var in) -> Var {
    Var up = up1s[i](f, in);
    Var low = low1s[i](f, in);
    Var mid = (i + 1 < depth()) ? level(i + 1, low) : inner(f, low);
    Var out = upsample_nearest(low3s[i](f, mid), 2);
    return add(up, out);
  };
  return level(0, x);
}

int64_t Hourglass::macs(int64_t h, int64_t w) const {
  std::function<int64_t(int64_t, int64_t, int64_t)> level = [&](int64_t i, int64_t lh,
                                                                int64_t lw) -> int64_t {
    int64_t n = up1s[i].macs(lh, lw) + low1s[i].macs(lh, lw);
    int64_t mh = lh / 2, mw = lw / 2;
    n += (i + 1 < depth()) ? level(i + 1, mh, mw) : inner.macs(mh, mw);
    return n + low3s[i].macs(mh, mw);
  };
  return level(0, h, w);
}

int64_t Hourglass::param_count() const {
  int64_t n = inner.param_count();
  for (size_t i = 0; i < up1s.size(); ++i)
    n += up1s[i].param_count() + low1s[i].param_count() + low3s[i].param_count();
  return n;
}

Backbone Backbone::make(ParamStore& ps, const std::string& name, std::vector<int64_t> dims,
                        Rng& rng) {
  check(!dims.empty() && dims[0] % 2 == 0, "backbone needs an even base channel width");
  Backbone b;
  b.dims = dims;
  b.stem1 = ConvBnRelu::make(ps, name + ".stem1", ConvSpec{11, 11, 2, 5, 3, dims[0] / 2}, rng);
  b.stem2 =
      ConvBnRelu::make(ps, name + ".stem2", ConvSpec{5, 5, 2, 2, dims[0] / 2, dims[0]}, rng);
  b.hg1 = Hourglass::make(ps, name + ".hg1", dims, rng);
  b.hg2 = Hourglass::make(ps, name + ".hg2", dims, rng);
  b.inter = ConvBnRelu::make(ps, name + ".inter", pointwise(dims[0], dims[0], 1), rng);
  return b;
}

Backbone::Out Backbone::operator()(Fwd& f, Var image) const {
  Var x0 = stem2(f, stem1(f, image));
  Var s1 = hg1(f, x0);
  Var s2 = hg2(f, add(x0, inter(f, s1)));
  return {s1, s2};
}

int64_t Backbone::param_count() const {
  return stem1.param_count() + stem2.param_count() + hg1.param_count() + hg2.param_count() +
         inter.param_count();
}

int64_t Backbone::macs(int64_t h, int64_t w) const {
  auto [h2, w2] = stem1.conv.out_hw(h, w);
  auto [h4, w4] = stem2.conv.out_hw(h2, w2);
  return stem1.conv.macs(h, w) + stem2.conv.macs(h2, w2) + hg1.macs(h4, w4) +
         inter.conv.macs(h4, w4) + hg2.macs(h4, w4);
}

int64_t Backbone::feature_extent(int64_t image_extent) {
  int64_t after1 = conv_out_extent(image_extent, 11, 2, 5);
  return conv_out_extent(after1, 5, 2, 2);
}

}  // namespace satin
