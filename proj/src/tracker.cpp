#include "satin/tracker.hpp"

#include <algorithm>

#include "satin/labels.hpp"

namespace satin {

Tracker::Tracker(const Model& model, TrackerConfig cfg) : model_(model), cfg_(cfg) {}

void Tracker::init(const Tensor& image, const Box& box) {
  box_ = box;
  last_score_ = 1.0;
  last_degenerate_ = false;

  CropResult crop =
      crop_and_resize(image, box, cfg_.exemplar_factor, model_.cfg.exemplar_size);
  // Per-sample batch-norm statistics at inference: the backbone is trained
  // with per-sample normalization, and running-stat normalization drifts
  // multiplicatively through the deep stack on this data.
  Tape tape(false);
  Fwd f{tape, true};
  Var ex = ops::leaf(tape, crop.patch);
  Model::Kernels k = model_.exemplar_kernels(f, ex);
  kernels_ = {k.tl.score.val(),  k.tl.offset.val(), k.br.score.val(),
              k.br.offset.val(), k.ct.score.val(),  k.ct.offset.val()};
}

Box Tracker::update(const Tensor& image) {
  const ModelConfig& mc = model_.cfg;
  CropResult crop =
      crop_and_resize(image, box_, cfg_.candidate_factor, mc.candidate_size);

  Tape tape(false);
  Fwd f{tape, true};
  Var cand = ops::leaf(tape, crop.patch);
  Model::Kernels k{{ops::leaf(tape, kernels_.tl_score), ops::leaf(tape, kernels_.tl_offset)},
                   {ops::leaf(tape, kernels_.br_score), ops::leaf(tape, kernels_.br_offset)},
                   {ops::leaf(tape, kernels_.ct_score), ops::leaf(tape, kernels_.ct_offset)}};
  Model::Out out = model_.respond(f, cand, k);

  double stride = double(mc.stride()), origin = mc.origin();
  Peak tl = decode_peak(out.tl.heatmap.val(), out.tl.offsets.val(), stride, origin);
  Peak br = decode_peak(out.br.heatmap.val(), out.br.offsets.val(), stride, origin);
  Peak ct = decode_peak(out.ct.heatmap.val(), out.ct.offsets.val(), stride, origin);
  last_score_ = (tl.score + br.score + ct.score) / 3.0;

  Box prev_patch = crop.map.to_patch(box_);
  Assembled a = assemble_box(Pt{tl.col_px, tl.row_px}, Pt{ct.col_px, ct.row_px},
                             Pt{br.col_px, br.row_px}, prev_patch, cfg_.corner_tol);
  last_degenerate_ = a.degenerate;

  Box det = crop.map.to_frame(a.box);

  // Keep a usable box inside the frame.
  double W = double(image.extent(2)), H = double(image.extent(1));
  double w = std::max(1.0, det.w()), h = std::max(1.0, det.h());
  double cx = std::clamp(det.cx(), 0.0, W - 1);
  double cy = std::clamp(det.cy(), 0.0, H - 1);
  box_ = Box::from_center(cx, cy, w, h);
  return box_;
}

}  // namespace satin
