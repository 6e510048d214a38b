#include "satin/heads.hpp"

namespace satin {

using namespace ops;

namespace {

ConvSpec conv3(int64_t in, int64_t out) { return ConvSpec{3, 3, 1, 1, in, out}; }

ConvSpec conv1(int64_t in, int64_t out) {
  return ConvSpec{1, 1, 1, 0, in, out, ConvMode::pointwise};
}

}  // namespace

KeypointFeature KeypointFeature::make(ParamStore& ps, const std::string& name, int64_t channels,
                                      Keypoint kind, bool pool, Rng& rng) {
  KeypointFeature k;
  k.kind = kind;
  k.pool = pool && kind != Keypoint::centroid;
  k.orient_a = Conv2d::make(ps, name + ".orient_a", conv3(channels, channels), true, rng);
  if (k.pool)
    k.orient_b = Conv2d::make(ps, name + ".orient_b", conv3(channels, channels), true, rng);
  k.post = Conv2d::make(ps, name + ".post", conv3(channels, channels), true, rng);
  k.resid = Conv2d::make(ps, name + ".resid", conv1(channels, channels), true, rng);
  return k;
}

Var KeypointFeature::operator()(Fwd& f, Var x) const {
  Var main;
  if (pool) {
    Corner c = kind == Keypoint::top_left ? Corner::top_left : Corner::bottom_right;
    main = corner_pool(orient_a(f, x), orient_b(f, x), c);
  } else {
    main = orient_a(f, x);
  }
  return add(post(f, main), resid(f, x));
}

int64_t KeypointFeature::param_count() const {
  int64_t n = orient_a.param_count() + post.param_count() + resid.param_count();
  if (pool) n += orient_b.param_count();
  return n;
}

int64_t KeypointFeature::macs(int64_t h, int64_t w) const {
  int64_t n = orient_a.macs(h, w) + post.macs(h, w) + resid.macs(h, w);
  if (pool) n += orient_b.macs(h, w);
  return n;
}

Var quarter_crop(Var x, Keypoint kind) {
  int64_t h = x.val().extent(1), w = x.val().extent(2);
  check(h % 2 == 0 && w % 2 == 0, "quarter_crop: extents must be divisible by 2");
  switch (kind) {
    case Keypoint::top_left:
      return crop(x, 0, h / 2, 0, w / 2);
    case Keypoint::bottom_right:
      return crop(x, h / 2, h, w / 2, w);
    case Keypoint::centroid:
      check(h % 4 == 0 && w % 4 == 0,
            "quarter_crop: centroid crop needs extents divisible by 4");
      return crop(x, h / 4, h / 4 + h / 2, w / 4, w / 4 + w / 2);
  }
  fail("quarter_crop: bad keypoint");
}

KeypointHead KeypointHead::make(ParamStore& ps, const std::string& name, int64_t channels,
                                Keypoint kind, bool pool, Rng& rng) {
  KeypointHead h;
  h.kind = kind;
  h.ex_feat = KeypointFeature::make(ps, name + ".ex", channels, kind, pool, rng);
  h.cand_feat = KeypointFeature::make(ps, name + ".cand", channels, kind, pool, rng);
  h.ex_score = Conv2d::make(ps, name + ".ex_score", conv3(channels, channels), true, rng);
  h.ex_offset = Conv2d::make(ps, name + ".ex_offset", conv3(channels, 2 * channels), true, rng);
  h.cand_score = Conv2d::make(ps, name + ".cand_score", conv3(channels, channels), true, rng);
  h.cand_offset = Conv2d::make(ps, name + ".cand_offset", conv3(channels, channels), true, rng);
  h.heat_gain = ps.add(name + ".heat_gain", Tensor({1, 1, 1}, 1.0));
  h.heat_bias = ps.add(name + ".heat_bias", Tensor({1, 1, 1}, -2.0));
  h.off_bias = ps.add(name + ".off_bias", Tensor({2, 1, 1}, 0.0));
  return h;
}

KeypointHead::Kernels KeypointHead::kernels(Fwd& f, Var exemplar_features) const {
  Var exf = ex_feat(f, exemplar_features);
  return {quarter_crop(ex_score(f, exf), kind), quarter_crop(ex_offset(f, exf), kind)};
}

KeypointHead::Out KeypointHead::respond(Fwd& f, Var candidate_features, const Kernels& k) const {
  Var cf = cand_feat(f, candidate_features);
  Var score_map = cand_score(f, cf);
  Var offset_map = cand_offset(f, cf);

  const Tensor& kv = k.score.val();
  double k_elems = double(kv.extent(0) * kv.extent(1) * kv.extent(2));
  Tape& t = *candidate_features.tape;

  // Standardize the raw correlation map (zero mean, unit variance over the
  // response grid) before the sigmoid.  Raw correlations of non-negative
  // post-ReLU features are dominated by a large shared component, so without
  // this the sigmoid saturates and the gradient cannot shape the map.  A
  // learnable affine (gain, bias) restores expressiveness; bias starts
  // negative so scores begin as low probabilities.
  Var raw = cross_correlate(score_map, k.score, 1);
  Var centered = sub(raw, reduce_spatial(raw, Reduce::avg));
  Var var_map = reduce_spatial(mul(centered, centered), Reduce::avg);
  Var z = mul(centered, rsqrt_(var_map, 1e-6));
  Var heat = sigmoid(add(mul(z, Var{&t, t.param(*heat_gain)}), Var{&t, t.param(*heat_bias)}));
  Var offs = add(scale(cross_correlate(offset_map, k.offset, 2), 1.0 / k_elems),
                 Var{&t, t.param(*off_bias)});
  return {heat, offs};
}

KeypointHead::Out KeypointHead::operator()(Fwd& f, Var exemplar_features,
                                           Var candidate_features) const {
  return respond(f, candidate_features, kernels(f, exemplar_features));
}

int64_t KeypointHead::macs(int64_t ex_extent, int64_t cand_extent) const {
  int64_t e = ex_extent, c = cand_extent;
  int64_t k = e / 2, resp = c - k + 1;
  int64_t ch = cand_score.spec.out_channels;
  int64_t corr = resp * resp * k * k * ch        // score correlation
                 + resp * resp * k * k * 2 * ch; // grouped offset correlation
  return ex_feat.macs(e, e) + ex_score.macs(e, e) + ex_offset.macs(e, e) +
         cand_feat.macs(c, c) + cand_score.macs(c, c) + cand_offset.macs(c, c) + corr;
}

int64_t KeypointHead::param_count() const {
  return ex_feat.param_count() + cand_feat.param_count() + ex_score.param_count() +
         ex_offset.param_count() + cand_score.param_count() + cand_offset.param_count() +
         heat_gain->value.size() + heat_bias->value.size() + off_bias->value.size();
}

}  // namespace satin
