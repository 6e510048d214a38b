#include "satin/model.hpp"

namespace satin {

using namespace ops;

int64_t ModelConfig::kernel_extent() const {
  int64_t feat = Backbone::feature_extent(exemplar_size);
  int64_t reduced = conv_out_extent(feat, 3, 2, 1);
  return reduced / 2;
}

int64_t ModelConfig::response_extent() const {
  int64_t feat = Backbone::feature_extent(candidate_size);
  int64_t reduced = conv_out_extent(feat, 3, 2, 1);
  return reduced - kernel_extent() + 1;
}

void ModelConfig::validate() const {
  check(!dims.empty() && dims[0] >= 2 && dims[0] % 2 == 0,
        "model: dims[0] must be a positive even channel count");
  check(dims[0] % attention_ratio == 0,
        "model: attention ratio must divide the base width");
  int64_t exr = conv_out_extent(Backbone::feature_extent(exemplar_size), 3, 2, 1);
  check(exr % 4 == 0, "model: exemplar_size must give a reduced map divisible by 4, got " +
                          std::to_string(exr));
  check(response_extent() >= 3, "model: candidate_size too small for the exemplar kernel");
}

Model::Model(ModelConfig c) : cfg(std::move(c)) {
  cfg.validate();
  Rng rng(Rng::mix(cfg.init_seed, 0x5a71));
  backbone = Backbone::make(params, "backbone", cfg.dims, rng);
  attention = Attention::make(params, "attention", cfg.dims[0], cfg.attention_ratio, rng);
  int64_t hc = cfg.head_channels();
  ConvSpec red{3, 3, 2, 1, cfg.dims[0], hc};
  ex_reducer = Conv2d::make(params, "reducer.ex", red, true, rng);
  cand_reducer = Conv2d::make(params, "reducer.cand", red, true, rng);
  bool cp = cfg.use_corner_pool;
  tl = KeypointHead::make(params, "head.tl", hc, Keypoint::top_left, cp, rng);
  br = KeypointHead::make(params, "head.br", hc, Keypoint::bottom_right, cp, rng);
  ct = KeypointHead::make(params, "head.ct", hc, Keypoint::centroid, cp, rng);
  aux_ex_reducer = Conv2d::make(params, "aux.reducer.ex", red, true, rng);
  aux_cand_reducer = Conv2d::make(params, "aux.reducer.cand", red, true, rng);
  aux_tl = KeypointHead::make(params, "aux.tl", hc, Keypoint::top_left, cp, rng);
  aux_br = KeypointHead::make(params, "aux.br", hc, Keypoint::bottom_right, cp, rng);
  aux_ct = KeypointHead::make(params, "aux.ct", hc, Keypoint::centroid, cp, rng);
}

Model::Kernels Model::exemplar_kernels(Fwd& f, Var exemplar_image) const {
  Backbone::Out ex = backbone(f, exemplar_image);
  Var main = cfg.use_attention ? attention(f, ex.stage1, ex.stage2) : ex.stage2;
  Var exr = ex_reducer(f, main);
  return {tl.kernels(f, exr), br.kernels(f, exr), ct.kernels(f, exr)};
}

Model::Out Model::respond(Fwd& f, Var candidate_image, const Kernels& k) const {
  Backbone::Out cand = backbone(f, candidate_image);
  Var candr = cand_reducer(f, cand.stage2);
  Out out;
  out.tl = tl.respond(f, candr, k.tl);
  out.br = br.respond(f, candr, k.br);
  out.ct = ct.respond(f, candr, k.ct);
  return out;
}

Model::Out Model::forward(Fwd& f, Var exemplar_image, Var candidate_image, bool aux) const {
  Backbone::Out ex = backbone(f, exemplar_image);
  Backbone::Out cand = backbone(f, candidate_image);

  Var ex_main = cfg.use_attention ? attention(f, ex.stage1, ex.stage2) : ex.stage2;
  Var exr = ex_reducer(f, ex_main);
  Var candr = cand_reducer(f, cand.stage2);

  Out out;
  out.tl = tl(f, exr, candr);
  out.br = br(f, exr, candr);
  out.ct = ct(f, exr, candr);
  if (aux) {
    Var exr1 = aux_ex_reducer(f, ex.stage1);
    Var candr1 = aux_cand_reducer(f, cand.stage1);
    out.aux_tl = aux_tl(f, exr1, candr1);
    out.aux_br = aux_br(f, exr1, candr1);
    out.aux_ct = aux_ct(f, exr1, candr1);
  }
  return out;
}

int64_t Model::param_total() const { return params.trainable_count(); }

ModelReport model_report(const Model& m) {
  const ModelConfig& cfg = m.cfg;
  int64_t fe = Backbone::feature_extent(cfg.exemplar_size);
  int64_t fc = Backbone::feature_extent(cfg.candidate_size);
  int64_t re = conv_out_extent(fe, 3, 2, 1);
  int64_t rc = conv_out_extent(fc, 3, 2, 1);

  ModelReport r;
  auto row = [&](const std::string& name, int64_t params, int64_t macs) {
    r.rows.push_back({name, params, macs});
    r.total_params += params;
    r.total_macs += macs;
  };
  row("backbone", m.backbone.param_count(),
      m.backbone.macs(cfg.exemplar_size, cfg.exemplar_size) +
          m.backbone.macs(cfg.candidate_size, cfg.candidate_size));
  row("attention", m.attention.param_count(), cfg.use_attention ? m.attention.macs(fe, fe) : 0);
  row("reducers", m.ex_reducer.param_count() + m.cand_reducer.param_count(),
      m.ex_reducer.macs(fe, fe) + m.cand_reducer.macs(fc, fc));
  row("heads",
      m.tl.param_count() + m.br.param_count() + m.ct.param_count(),
      m.tl.macs(re, rc) + m.br.macs(re, rc) + m.ct.macs(re, rc));
  row("aux",
      m.aux_ex_reducer.param_count() + m.aux_cand_reducer.param_count() +
          m.aux_tl.param_count() + m.aux_br.param_count() + m.aux_ct.param_count(),
      m.aux_ex_reducer.macs(fe, fe) + m.aux_cand_reducer.macs(fc, fc) + m.aux_tl.macs(re, rc) +
          m.aux_br.macs(re, rc) + m.aux_ct.macs(re, rc));
  return r;
}

}  // namespace satin
