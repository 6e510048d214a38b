#pragma once

#include <functional>

#include "satin/tape.hpp"

namespace satin {
namespace ops {

enum class ConvMode { standard, depthwise, pointwise };

struct ConvSpec {
  int64_t kernel_h = 1;
  int64_t kernel_w = 1;
  int64_t stride = 1;
  int64_t padding = 0;
  int64_t in_channels = 0;
  int64_t out_channels = 0;
  ConvMode mode = ConvMode::standard;

  void validate() const;
};

// floor((in + 2*padding - kernel)/stride) + 1
int64_t conv_out_extent(int64_t in, int64_t kernel, int64_t stride, int64_t padding);

enum class Reduce { avg, max };
enum class Corner { top_left, bottom_right };

Var leaf(Tape& t, Tensor v);

Var add(Var a, Var b);   // broadcasting (extent equal or 1)
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var relu(Var a);
Var sigmoid(Var a);
Var log_(Var a);
Var clamp(Var a, double lo, double hi);
Var abs_(Var a);
Var rsqrt_(Var a, double eps);  // elementwise 1/sqrt(a + eps)
Var smooth_l1(Var a);  // elementwise robust loss kernel
Var sum_all(Var a);    // -> scalar
Var div_scalar(Var a, Var s);
Var concat_channels(Var a, Var b);

Var conv2d(Var x, Var w, Var b, const ConvSpec& spec);  // pass Var{} for no bias
Var batch_norm(Var x, Var gamma, Var beta, Param* run_mean, Param* run_var, bool training,
               double momentum = 0.1, double eps = 1e-5);
Var upsample_nearest(Var x, int64_t factor);
Var reduce_spatial(Var x, Reduce kind);  // (C,H,W) -> (C,1,1)
Var reduce_channel(Var x, Reduce kind);  // (C,H,W) -> (1,H,W)
Var cross_correlate(Var cand, Var kernel, int64_t groups);
Var corner_pool(Var fa, Var fb, Corner corner);
Var crop(Var x, int64_t h0, int64_t h1, int64_t w0, int64_t w1);

// Soft-argmax of a (1,H,W) positive map: probability-weighted expected
// (row, col) cell coordinates. Differentiable surrogate for argmax.
std::pair<Var, Var> soft_argmax(Var heatmap);

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool ok = false;
  bool non_finite = false;
  bool non_checkable = false;  // evaluated at a kink
  std::string note;
};

// Compares the analytic gradient of a scalar-valued tensor function against
// central finite differences.
GradCheckReport grad_check(const std::function<Var(Tape&, Var)>& fn, const Tensor& point,
                           double tol, double h = 1e-5);

}  // namespace ops
}  // namespace satin
