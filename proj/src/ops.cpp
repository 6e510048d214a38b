#include "satin/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace satin {
namespace ops {

namespace {

Tape& same_tape(Var a, Var b) {
  check(a.tape == b.tape, "operands recorded on different tapes");
  return *a.tape;
}

void check_rank3(const Tensor& t, const char* op) {
  check(t.rank() == 3, std::string(op) + ": expected a (C,H,W) tensor, got shape " +
                           shape_str(t.shape()));
}

// Generic broadcast helpers for equal-rank tensors whose extents match or
// are 1. Used by add/sub/mul; hot same-shape paths are special-cased.
std::vector<int64_t> broadcast_shape(const Tensor& a, const Tensor& b, const char* op) {
  check(a.rank() == b.rank(), std::string(op) + ": rank mismatch " + shape_str(a.shape()) +
                                  " vs " + shape_str(b.shape()));
  std::vector<int64_t> out(a.rank());
  for (int i = 0; i < a.rank(); ++i) {
    int64_t ea = a.extent(i), eb = b.extent(i);
    check(ea == eb || ea == 1 || eb == 1,
          std::string(op) + ": axis " + std::to_string(i) + " not broadcastable, " +
              shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    out[i] = std::max(ea, eb);
  }
  return out;
}

std::vector<int64_t> strides_of(const std::vector<int64_t>& shape) {
  std::vector<int64_t> s(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) s[i] = s[i + 1] * shape[i + 1];
  return s;
}

// Iterates the broadcast output space, applying f(out_index, a_index, b_index).
template <typename F>
void broadcast_iterate(const std::vector<int64_t>& out_shape, const Tensor& a, const Tensor& b,
                       F&& f) {
  auto so = strides_of(out_shape);
  auto sa = strides_of(a.shape());
  auto sb = strides_of(b.shape());
  int64_t total = 1;
  for (int64_t e : out_shape) total *= e;
  int rank = static_cast<int>(out_shape.size());
  for (int64_t idx = 0; idx < total; ++idx) {
    int64_t rem = idx, ia = 0, ib = 0;
    for (int d = 0; d < rank; ++d) {
      int64_t c = rem / so[d];
      rem -= c * so[d];
      if (a.shape()[d] != 1) ia += c * sa[d];
      if (b.shape()[d] != 1) ib += c * sb[d];
    }
    f(idx, ia, ib);
  }
}

template <typename FwdSame, typename FwdBcast, typename Bwd>
Var binary_op(Var a, Var b, const char* name, FwdSame fwd_same, FwdBcast fwd_bcast, Bwd bwd) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  if (av.same_shape(bv)) {
    Tensor out(av.shape());
    fwd_same(av, bv, out);
    int id = t.push(std::move(out), {a.id, b.id},
                    [a, b, bwd, bcast = false](Tape& tp, int out_id) {
                      bwd(tp, out_id, a, b, bcast);
                    });
    return Var{&t, id};
  }
  auto oshape = broadcast_shape(av, bv, name);
  Tensor out(oshape);
  fwd_bcast(oshape, av, bv, out);
  int id = t.push(std::move(out), {a.id, b.id},
                  [a, b, bwd](Tape& tp, int out_id) { bwd(tp, out_id, a, b, true); });
  return Var{&t, id};
}

}  // namespace

void ConvSpec::validate() const {
  check(stride >= 1, "conv spec: stride must be >= 1");
  check(padding >= 0, "conv spec: padding must be >= 0");
  check(kernel_h >= 1 && kernel_w >= 1, "conv spec: kernel extents must be >= 1");
  check(in_channels >= 1 && out_channels >= 1, "conv spec: channel counts must be >= 1");
  if (mode == ConvMode::pointwise)
    check(kernel_h == 1 && kernel_w == 1, "conv spec: pointwise requires a 1x1 kernel");
  if (mode == ConvMode::depthwise)
    check(in_channels == out_channels, "conv spec: depthwise requires out_channels == in_channels");
}

int64_t conv_out_extent(int64_t in, int64_t kernel, int64_t stride, int64_t padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

namespace {
int64_t conv_out(int64_t in, int64_t k, int64_t s, int64_t p, const char* axis) {
  int64_t num = in + 2 * p - k;
  check(num >= 0, std::string("conv2d: kernel larger than padded input along ") + axis + " axis");
  return num / s + 1;
}
}  // namespace

Var leaf(Tape& t, Tensor v) { return Var{&t, t.leaf(std::move(v))}; }

Var add(Var a, Var b) {
  return binary_op(
      a, b, "add",
      [](const Tensor& av, const Tensor& bv, Tensor& out) {
        const double* pa = av.data();
        const double* pb = bv.data();
        double* po = out.data();
        for (int64_t i = 0; i < out.size(); ++i) po[i] = pa[i] + pb[i];
      },
      [](const std::vector<int64_t>&, const Tensor& av, const Tensor& bv, Tensor& out) {
        double* po = out.data();
        broadcast_iterate(out.shape(), av, bv, [&](int64_t io, int64_t ia, int64_t ib) {
          po[io] = av.data()[ia] + bv.data()[ib];
        });
      },
      [](Tape& tp, int out_id, Var a, Var b, bool bcast) {
        const Tensor& g = tp.grad(out_id);
        Tensor& ga = tp.grad(a.id);
        Tensor& gb = tp.grad(b.id);
        if (!bcast) {
          for (int64_t i = 0; i < g.size(); ++i) {
            ga.data()[i] += g.data()[i];
            gb.data()[i] += g.data()[i];
          }
        } else {
          broadcast_iterate(g.shape(), a.val(), b.val(), [&](int64_t io, int64_t ia, int64_t ib) {
            ga.data()[ia] += g.data()[io];
            gb.data()[ib] += g.data()[io];
          });
        }
      });
}

Var sub(Var a, Var b) {
  return binary_op(
      a, b, "sub",
      [](const Tensor& av, const Tensor& bv, Tensor& out) {
        for (int64_t i = 0; i < out.size(); ++i) out.data()[i] = av.data()[i] - bv.data()[i];
      },
      [](const std::vector<int64_t>&, const Tensor& av, const Tensor& bv, Tensor& out) {
        double* po = out.data();
        broadcast_iterate(out.shape(), av, bv, [&](int64_t io, int64_t ia, int64_t ib) {
          po[io] = av.data()[ia] - bv.data()[ib];
        });
      },
      [](Tape& tp, int out_id, Var a, Var b, bool bcast) {
        const Tensor& g = tp.grad(out_id);
        Tensor& ga = tp.grad(a.id);
        Tensor& gb = tp.grad(b.id);
        if (!bcast) {
          for (int64_t i = 0; i < g.size(); ++i) {
            ga.data()[i] += g.data()[i];
            gb.data()[i] -= g.data()[i];
          }
        } else {
          broadcast_iterate(g.shape(), a.val(), b.val(), [&](int64_t io, int64_t ia, int64_t ib) {
            ga.data()[ia] += g.data()[io];
            gb.data()[ib] -= g.data()[io];
          });
        }
      });
}

Var mul(Var a, Var b) {
  return binary_op(
      a, b, "mul",
      [](const Tensor& av, const Tensor& bv, Tensor& out) {
        for (int64_t i = 0; i < out.size(); ++i) out.data()[i] = av.data()[i] * bv.data()[i];
      },
      [](const std::vector<int64_t>&, const Tensor& av, const Tensor& bv, Tensor& out) {
        double* po = out.data();
        broadcast_iterate(out.shape(), av, bv, [&](int64_t io, int64_t ia, int64_t ib) {
          po[io] = av.data()[ia] * bv.data()[ib];
        });
      },
      [](Tape& tp, int out_id, Var a, Var b, bool bcast) {
        const Tensor& g = tp.grad(out_id);
        const Tensor& av = a.val();
        const Tensor& bv = b.val();
        Tensor& ga = tp.grad(a.id);
        Tensor& gb = tp.grad(b.id);
        if (!bcast) {
          for (int64_t i = 0; i < g.size(); ++i) {
            ga.data()[i] += g.data()[i] * bv.data()[i];
            gb.data()[i] += g.data()[i] * av.data()[i];
          }
        } else {
          broadcast_iterate(g.shape(), av, bv, [&](int64_t io, int64_t ia, int64_t ib) {
            ga.data()[ia] += g.data()[io] * bv.data()[ib];
            gb.data()[ib] += g.data()[io] * av.data()[ia];
          });
        }
      });
}

Var scale(Var a, double c) {
  Tape& t = *a.tape;
  const Tensor& av = a.val();
  Tensor out(av.shape());
  for (int64_t i = 0; i < out.size(); ++i) out.data()[i] = av.data()[i] * c;
  int id = t.push(std::move(out), {a.id}, [a, c](Tape& tp, int out_id) {
    const Tensor& g = tp.grad(out_id);
    Tensor& ga = tp.grad(a.id);
    for (int64_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * c;
  });
  return Var{&t, id};
}

namespace {
template <typename FwdElem, typename BwdElem>
Var unary_op(Var a, FwdElem fwd, BwdElem bwd) {
  Tape& t = *a.tape;
  const Tensor& av = a.val();
  Tensor out(av.shape());
  for (int64_t i = 0; i < out.size(); ++i) out.data()[i] = fwd(av.data()[i]);
  int id = t.push(std::move(out), {a.id}, [a, bwd](Tape& tp, int out_id) {
    const Tensor& g = tp.grad(out_id);
    const Tensor& x = a.val();
    const Tensor& y = tp.val(out_id);
    Tensor& ga = tp.grad(a.id);
    for (int64_t i = 0; i < g.size(); ++i)
      ga.data()[i] += g.data()[i] * bwd(x.data()[i], y.data()[i]);
  });
  return Var{&t, id};
}
}  // namespace

Var relu(Var a) {
  return unary_op(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary_op(
      a,
      [](double x) {
        double s = 1.0 / (1.0 + std::exp(-x));
        if (s <= 0.0) s = 1e-300;
        if (s >= 1.0) s = 1.0 - 1e-16;
        return s;
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var log_(Var a) {
  return unary_op(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var clamp(Var a, double lo, double hi) {
  return unary_op(
      a, [lo, hi](double x) { return std::min(hi, std::max(lo, x)); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var abs_(Var a) {
  return unary_op(
      a, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var rsqrt_(Var a, double eps) {
  return unary_op(
      a, [eps](double x) { return 1.0 / std::sqrt(x + eps); },
      [eps](double x, double y) { return -0.5 * y / (x + eps); });
}

Var smooth_l1(Var a) {
  return unary_op(
      a, [](double x) { return std::fabs(x) < 1.0 ? 0.5 * x * x : std::fabs(x) - 0.5; },
      [](double x, double) { return std::fabs(x) < 1.0 ? x : (x > 0.0 ? 1.0 : -1.0); });
}

Var sum_all(Var a) {
  Tape& t = *a.tape;
  const Tensor& av = a.val();
  double s = 0.0;
  for (int64_t i = 0; i < av.size(); ++i) s += av.data()[i];
  int id = t.push(Tensor::scalar(s), {a.id}, [a](Tape& tp, int out_id) {
    double g = tp.grad(out_id).item();
    Tensor& ga = tp.grad(a.id);
    for (int64_t i = 0; i < ga.size(); ++i) ga.data()[i] += g;
  });
  return Var{&t, id};
}

Var div_scalar(Var a, Var s) {
  Tape& t = same_tape(a, s);
  check(s.val().size() == 1, "div_scalar: divisor must be a scalar");
  const Tensor& av = a.val();
  double d = s.val().item();
  Tensor out(av.shape());
  for (int64_t i = 0; i < out.size(); ++i) out.data()[i] = av.data()[i] / d;
  int id = t.push(std::move(out), {a.id, s.id}, [a, s, d](Tape& tp, int out_id) {
    const Tensor& g = tp.grad(out_id);
    const Tensor& av = a.val();
    Tensor& ga = tp.grad(a.id);
    Tensor& gs = tp.grad(s.id);
    double acc = 0.0;
    for (int64_t i = 0; i < g.size(); ++i) {
      ga.data()[i] += g.data()[i] / d;
      acc += g.data()[i] * av.data()[i];
    }
    gs.data()[0] -= acc / (d * d);
  });
  return Var{&t, id};
}

Var concat_channels(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  check_rank3(av, "concat_channels");
  check_rank3(bv, "concat_channels");
  check(av.extent(1) == bv.extent(1) && av.extent(2) == bv.extent(2),
        "concat_channels: spatial extents differ: " + shape_str(av.shape()) + " vs " +
            shape_str(bv.shape()));
  Tensor out({av.extent(0) + bv.extent(0), av.extent(1), av.extent(2)});
  std::memcpy(out.data(), av.data(), av.size() * sizeof(double));
  std::memcpy(out.data() + av.size(), bv.data(), bv.size() * sizeof(double));
  int id = t.push(std::move(out), {a.id, b.id}, [a, b](Tape& tp, int out_id) {
    const Tensor& g = tp.grad(out_id);
    Tensor& ga = tp.grad(a.id);
    Tensor& gb = tp.grad(b.id);
    for (int64_t i = 0; i < ga.size(); ++i) ga.data()[i] += g.data()[i];
    for (int64_t i = 0; i < gb.size(); ++i) gb.data()[i] += g.data()[ga.size() + i];
  });
  return Var{&t, id};
}

namespace {

// Shared conv kernels. Weight layouts: standard/pointwise (Cout,Cin,Kh,Kw),
// depthwise (C,1,Kh,Kw).
void conv_forward(const Tensor& x, const Tensor& w, const Tensor* b, const ConvSpec& sp,
                  Tensor& out) {
  const int64_t C = x.extent(0), H = x.extent(1), W = x.extent(2);
  const int64_t OC = out.extent(0), OH = out.extent(1), OW = out.extent(2);
  const int64_t KH = sp.kernel_h, KW = sp.kernel_w, S = sp.stride, P = sp.padding;
  const bool dw = sp.mode == ConvMode::depthwise;
  const double* xd = x.data();
  const double* wd = w.data();
  double* od = out.data();
  for (int64_t oc = 0; oc < OC; ++oc) {
    double bias = b ? b->data()[oc] : 0.0;
    double* op = od + oc * OH * OW;
    std::fill(op, op + OH * OW, bias);
    int64_t ic0 = dw ? oc : 0;
    int64_t ic1 = dw ? oc + 1 : C;
    for (int64_t ic = ic0; ic < ic1; ++ic) {
      const double* xc = xd + ic * H * W;
      const double* wk = wd + (dw ? oc : oc * C + ic) * KH * KW;
      for (int64_t kh = 0; kh < KH; ++kh) {
        // valid oh range: 0 <= oh*S + kh - P < H
        int64_t oh_lo = std::max<int64_t>(0, (P - kh + S - 1) / S);
        int64_t oh_hi = std::min(OH, (H - 1 - kh + P) / S + 1);
        for (int64_t kw = 0; kw < KW; ++kw) {
          double wv = wk[kh * KW + kw];
          if (wv == 0.0) continue;
          int64_t ow_lo = std::max<int64_t>(0, (P - kw + S - 1) / S);
          int64_t ow_hi = std::min(OW, (W - 1 - kw + P) / S + 1);
          for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
            const double* xrow = xc + (oh * S + kh - P) * W + (kw - P);
            double* orow = op + oh * OW;
            if (S == 1) {
              for (int64_t ow = ow_lo; ow < ow_hi; ++ow) orow[ow] += wv * xrow[ow];
            } else {
              for (int64_t ow = ow_lo; ow < ow_hi; ++ow) orow[ow] += wv * xrow[ow * S];
            }
          }
        }
      }
    }
  }
}

void conv_backward(const Tensor& x, const Tensor& w, const ConvSpec& sp, const Tensor& gout,
                   Tensor* gx, Tensor* gw, Tensor* gb) {
  const int64_t C = x.extent(0), H = x.extent(1), W = x.extent(2);
  const int64_t OC = gout.extent(0), OH = gout.extent(1), OW = gout.extent(2);
  const int64_t KH = sp.kernel_h, KW = sp.kernel_w, S = sp.stride, P = sp.padding;
  const bool dw = sp.mode == ConvMode::depthwise;
  const double* xd = x.data();
  const double* wd = w.data();
  const double* gd = gout.data();
  for (int64_t oc = 0; oc < OC; ++oc) {
    const double* gp = gd + oc * OH * OW;
    if (gb) {
      double acc = 0.0;
      for (int64_t i = 0; i < OH * OW; ++i) acc += gp[i];
      gb->data()[oc] += acc;
    }
    int64_t ic0 = dw ? oc : 0;
    int64_t ic1 = dw ? oc + 1 : C;
    for (int64_t ic = ic0; ic < ic1; ++ic) {
      const double* xc = xd + ic * H * W;
      double* gxc = gx ? gx->data() + ic * H * W : nullptr;
      int64_t widx = (dw ? oc : oc * C + ic) * KH * KW;
      for (int64_t kh = 0; kh < KH; ++kh) {
        int64_t oh_lo = std::max<int64_t>(0, (P - kh + S - 1) / S);
        int64_t oh_hi = std::min(OH, (H - 1 - kh + P) / S + 1);
        for (int64_t kw = 0; kw < KW; ++kw) {
          double wv = wd[widx + kh * KW + kw];
          int64_t ow_lo = std::max<int64_t>(0, (P - kw + S - 1) / S);
          int64_t ow_hi = std::min(OW, (W - 1 - kw + P) / S + 1);
          double gwacc = 0.0;
          for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
            const double* xrow = xc + (oh * S + kh - P) * W + (kw - P);
            double* gxrow = gxc ? gxc + (oh * S + kh - P) * W + (kw - P) : nullptr;
            const double* grow = gp + oh * OW;
            if (S == 1) {
              if (gxrow) {
                for (int64_t ow = ow_lo; ow < ow_hi; ++ow) {
                  gwacc += xrow[ow] * grow[ow];
                  gxrow[ow] += wv * grow[ow];
                }
              } else {
                for (int64_t ow = ow_lo; ow < ow_hi; ++ow) gwacc += xrow[ow] * grow[ow];
              }
            } else {
              for (int64_t ow = ow_lo; ow < ow_hi; ++ow) {
                gwacc += xrow[ow * S] * grow[ow];
                if (gxrow) gxrow[ow * S] += wv * grow[ow];
              }
            }
          }
          if (gw) gw->data()[widx + kh * KW + kw] += gwacc;
        }
      }
    }
  }
}

}  // namespace

Var conv2d(Var x, Var w, Var b, const ConvSpec& spec) {
  Tape& t = *x.tape;
  spec.validate();
  const Tensor& xv = x.val();
  const Tensor& wv = w.val();
  check_rank3(xv, "conv2d");
  check(xv.extent(0) == spec.in_channels,
        "conv2d: channel axis mismatch: input has " + std::to_string(xv.extent(0)) +
            " channels, spec expects " + std::to_string(spec.in_channels));
  std::vector<int64_t> expect_w =
      spec.mode == ConvMode::depthwise
          ? std::vector<int64_t>{spec.out_channels, 1, spec.kernel_h, spec.kernel_w}
          : std::vector<int64_t>{spec.out_channels, spec.in_channels, spec.kernel_h, spec.kernel_w};
  check(wv.shape() == expect_w, "conv2d: weight shape " + shape_str(wv.shape()) +
                                    " does not match spec " + shape_str(expect_w));
  if (b.defined())
    check(b.val().size() == spec.out_channels, "conv2d: bias axis mismatch: got " +
                                                   std::to_string(b.val().size()) + " expected " +
                                                   std::to_string(spec.out_channels));
  int64_t oh = conv_out(xv.extent(1), spec.kernel_h, spec.stride, spec.padding, "height");
  int64_t ow = conv_out(xv.extent(2), spec.kernel_w, spec.stride, spec.padding, "width");
  Tensor out({spec.out_channels, oh, ow});
  conv_forward(xv, wv, b.defined() ? &b.val() : nullptr, spec, out);

  std::vector<int> inputs{x.id, w.id};
  if (b.defined()) inputs.push_back(b.id);
  int id = t.push(std::move(out), std::move(inputs), [x, w, b, spec](Tape& tp, int out_id) {
    const Tensor& g = tp.grad(out_id);
    Tensor& gx = tp.grad(x.id);
    Tensor& gw = tp.grad(w.id);
    Tensor* gb = b.defined() ? &tp.grad(b.id) : nullptr;
    conv_backward(x.val(), w.val(), spec, g, &gx, &gw, gb);
  });
  return Var{&t, id};
}

Var batch_norm(Var x, Var gamma, Var beta, Param* run_mean, Param* run_var, bool training,
               double momentum, double eps) {
  Tape& t = *x.tape;
  const Tensor& xv = x.val();
  check_rank3(xv, "batch_norm");
  const int64_t C = xv.extent(0), H = xv.extent(1), W = xv.extent(2);
  const int64_t N = H * W;
  check(gamma.val().size() == C && beta.val().size() == C,
        "batch_norm: gamma/beta must have one entry per channel");
  check(run_mean->value.size() == C && run_var->value.size() == C,
        "batch_norm: running stats must have one entry per channel");

  Tensor mean({C}), var({C});
  if (training) {
    for (int64_t c = 0; c < C; ++c) {
      const double* xc = xv.data() + c * N;
      double m = 0.0;
      for (int64_t i = 0; i < N; ++i) m += xc[i];
      m /= static_cast<double>(N);
      double v = 0.0;
      for (int64_t i = 0; i < N; ++i) {
        double d = xc[i] - m;
        v += d * d;
      }
      mean.data()[c] = m;
      var.data()[c] = v / static_cast<double>(N);
    }
    t.bn_observations.push_back(Tape::BnObservation{run_mean, run_var, mean, var, momentum});
  } else {
    mean = run_mean->value;
    var = run_var->value;
  }

  Tensor out(xv.shape());
  for (int64_t c = 0; c < C; ++c) {
    double ivstd = 1.0 / std::sqrt(var.data()[c] + eps);
    double gm = gamma.val().data()[c];
    double bt = beta.val().data()[c];
    double m = mean.data()[c];
    const double* xc = xv.data() + c * N;
    double* oc = out.data() + c * N;
    for (int64_t i = 0; i < N; ++i) oc[i] = gm * (xc[i] - m) * ivstd + bt;
  }

  int id = t.push(std::move(out), {x.id, gamma.id, beta.id},
                  [x, gamma, beta, mean, var, training, eps, N, C](Tape& tp, int out_id) {
                    const Tensor& g = tp.grad(out_id);
                    const Tensor& xv = x.val();
                    Tensor& gx = tp.grad(x.id);
                    Tensor& gg = tp.grad(gamma.id);
                    Tensor& gb = tp.grad(beta.id);
                    for (int64_t c = 0; c < C; ++c) {
                      double m = mean.data()[c];
                      double ivstd = 1.0 / std::sqrt(var.data()[c] + eps);
                      double gm = gamma.val().data()[c];
                      const double* xc = xv.data() + c * N;
                      const double* gc = g.data() + c * N;
                      double* gxc = gx.data() + c * N;
                      double sum_g = 0.0, sum_gx = 0.0;
                      for (int64_t i = 0; i < N; ++i) {
                        sum_g += gc[i];
                        sum_gx += gc[i] * (xc[i] - m);
                      }
                      gb.data()[c] += sum_g;
                      gg.data()[c] += sum_gx * ivstd;
                      if (training) {
                        // full backward through the batch statistics
                        double inv_n = 1.0 / static_cast<double>(N);
                        double dvar = -0.5 * gm * sum_gx * ivstd * ivstd * ivstd;
                        double dmean = -gm * ivstd * sum_g;
                        for (int64_t i = 0; i < N; ++i) {
                          gxc[i] += gm * gc[i] * ivstd + dvar * 2.0 * (xc[i] - m) * inv_n +
                                    dmean * inv_n;
                        }
                      } else {
                        for (int64_t i = 0; i < N; ++i) gxc[i] += gm * gc[i] * ivstd;
                      }
                    }
                  });
  return Var{&t, id};
}

Var upsample_nearest(Var x, int64_t factor) {
  Tape& t = *x.tape;
  check(factor >= 1, "upsample_nearest: factor must be >= 1");
  const Tensor& xv = x.val();
  check_rank3(xv, "upsample_nearest");
  const int64_t C = xv.extent(0), H = xv.extent(1), W = xv.extent(2);
  Tensor out({C, H * factor, W * factor});
  for (int64_t c = 0; c < C; ++c)
    for (int64_t h = 0; h < H * factor; ++h) {
      const double* xrow = xv.data() + (c * H + h / factor) * W;
      double* orow = out.data() + (c * H * factor + h) * W * factor;
      for (int64_t w = 0; w < W * factor; ++w) orow[w] = xrow[w / factor];
    }
  int id = t.push(std::move(out), {x.id}, [x, factor, C, H, W](Tape& tp, int out_id) {
    const Tensor& g = tp.grad(out_id);
    Tensor& gx = tp.grad(x.id);
    for (int64_t c = 0; c < C; ++c)
      for (int64_t h = 0; h < H * factor; ++h) {
        double* gxrow = gx.data() + (c * H + h / factor) * W;
        const double* grow = g.data() + (c * H * factor + h) * W * factor;
        for (int64_t w = 0; w < W * factor; ++w) gxrow[w / factor] += grow[w];
      }
  });
  return Var{&t, id};
}

Var reduce_spatial(Var x, Reduce kind) {
  Tape& t = *x.tape;
  const Tensor& xv = x.val();
  check_rank3(xv, "reduce_spatial");
  const int64_t C = xv.extent(0), N = xv.extent(1) * xv.extent(2);
  Tensor out({C, 1, 1});
  std::vector<int64_t> argmax(kind == Reduce::max ? C : 0);
  for (int64_t c = 0; c < C; ++c) {
    const double* xc = xv.data() + c * N;
    if (kind == Reduce::avg) {
      double s = 0.0;
      for (int64_t i = 0; i < N; ++i) s += xc[i];
      out.data()[c] = s / static_cast<double>(N);
    } else {
      int64_t best = 0;
      for (int64_t i = 1; i < N; ++i)
        if (xc[i] > xc[best]) best = i;
      out.data()[c] = xc[best];
      argmax[c] = best;
    }
  }
  int id = t.push(std::move(out), {x.id},
                  [x, kind, C, N, argmax = std::move(argmax)](Tape& tp, int out_id) {
                    const Tensor& g = tp.grad(out_id);
                    Tensor& gx = tp.grad(x.id);
                    for (int64_t c = 0; c < C; ++c) {
                      if (kind == Reduce::avg) {
                        double gv = g.data()[c] / static_cast<double>(N);
                        double* gxc = gx.data() + c * N;
                        for (int64_t i = 0; i < N; ++i) gxc[i] += gv;
                      } else {
                        gx.data()[c * N + argmax[c]] += g.data()[c];
                      }
                    }
                  });
  return Var{&t, id};
}

Var reduce_channel(Var x, Reduce kind) {
  Tape& t = *x.tape;
  const Tensor& xv = x.val();
  check_rank3(xv, "reduce_channel");
  const int64_t C = xv.extent(0), N = xv.extent(1) * xv.extent(2);
  Tensor out({1, xv.extent(1), xv.extent(2)});
  std::vector<int64_t> argmax(kind == Reduce::max ? N : 0);
  for (int64_t i = 0; i < N; ++i) {
    if (kind == Reduce::avg) {
      double s = 0.0;
      for (int64_t c = 0; c < C; ++c) s += xv.data()[c * N + i];
      out.data()[i] = s / static_cast<double>(C);
    } else {
      int64_t best = 0;
      for (int64_t c = 1; c < C; ++c)
        if (xv.data()[c * N + i] > xv.data()[best * N + i]) best = c;
      out.data()[i] = xv.data()[best * N + i];
      argmax[i] = best;
    }
  }
  int id = t.push(std::move(out), {x.id},
                  [x, kind, C, N, argmax = std::move(argmax)](Tape& tp, int out_id) {
                    const Tensor& g = tp.grad(out_id);
                    Tensor& gx = tp.grad(x.id);
                    for (int64_t i = 0; i < N; ++i) {
                      if (kind == Reduce::avg) {
                        double gv = g.data()[i] / static_cast<double>(C);
                        for (int64_t c = 0; c < C; ++c) gx.data()[c * N + i] += gv;
                      } else {
                        gx.data()[argmax[i] * N + i] += g.data()[i];
                      }
                    }
                  });
  return Var{&t, id};
}

Var cross_correlate(Var cand, Var kernel, int64_t groups) {
  Tape& t = same_tape(cand, kernel);
  const Tensor& cv = cand.val();
  const Tensor& kv = kernel.val();
  check_rank3(cv, "cross_correlate");
  check_rank3(kv, "cross_correlate");
  check(groups >= 1, "cross_correlate: groups must be >= 1");
  const int64_t C = cv.extent(0), H = cv.extent(1), W = cv.extent(2);
  const int64_t KH = kv.extent(1), KW = kv.extent(2);
  check(kv.extent(0) == groups * C,
        "cross_correlate: kernel channel axis must equal groups * candidate channels, got " +
            std::to_string(kv.extent(0)) + " expected " + std::to_string(groups * C));
  check(KH <= H && KW <= W, "cross_correlate: kernel spatial extent exceeds candidate: kernel " +
                                shape_str(kv.shape()) + " candidate " + shape_str(cv.shape()));
  const int64_t OH = H - KH + 1, OW = W - KW + 1;
  Tensor out({groups, OH, OW});
  double* od = out.data();
  for (int64_t g = 0; g < groups; ++g) {
    double* op = od + g * OH * OW;
    for (int64_t c = 0; c < C; ++c) {
      const double* cc = cv.data() + c * H * W;
      const double* kc = kv.data() + (g * C + c) * KH * KW;
      for (int64_t kh = 0; kh < KH; ++kh)
        for (int64_t kw = 0; kw < KW; ++kw) {
          double wv = kc[kh * KW + kw];
          if (wv == 0.0) continue;
          for (int64_t oh = 0; oh < OH; ++oh) {
            const double* crow = cc + (oh + kh) * W + kw;
            double* orow = op + oh * OW;
            for (int64_t ow = 0; ow < OW; ++ow) orow[ow] += wv * crow[ow];
          }
        }
    }
  }
  int id = t.push(std::move(out), {cand.id, kernel.id},
                  [cand, kernel, groups, C, H, W, KH, KW, OH, OW](Tape& tp, int out_id) {
                    const Tensor& g = tp.grad(out_id);
                    const Tensor& cv = cand.val();
                    const Tensor& kv = kernel.val();
                    Tensor& gc = tp.grad(cand.id);
                    Tensor& gk = tp.grad(kernel.id);
                    for (int64_t gi = 0; gi < groups; ++gi) {
                      const double* gp = g.data() + gi * OH * OW;
                      for (int64_t c = 0; c < C; ++c) {
                        const double* cc = cv.data() + c * H * W;
                        double* gcc = gc.data() + c * H * W;
                        const double* kc = kv.data() + (gi * C + c) * KH * KW;
                        double* gkc = gk.data() + (gi * C + c) * KH * KW;
                        for (int64_t kh = 0; kh < KH; ++kh)
                          for (int64_t kw = 0; kw < KW; ++kw) {
                            double wv = kc[kh * KW + kw];
                            double acc = 0.0;
                            for (int64_t oh = 0; oh < OH; ++oh) {
                              const double* crow = cc + (oh + kh) * W + kw;
                              double* gcrow = gcc + (oh + kh) * W + kw;
                              const double* grow = gp + oh * OW;
                              for (int64_t ow = 0; ow < OW; ++ow) {
                                acc += crow[ow] * grow[ow];
                                gcrow[ow] += wv * grow[ow];
                              }
                            }
                            gkc[kh * KW + kw] += acc;
                          }
                      }
                    }
                  });
  return Var{&t, id};
}

Var corner_pool(Var fa, Var fb, Corner corner) {
  Tape& t = same_tape(fa, fb);
  const Tensor& av = fa.val();
  const Tensor& bv = fb.val();
  check_rank3(av, "corner_pool");
  check(av.same_shape(bv), "corner_pool: inputs must have identical shapes, got " +
                               shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  const int64_t C = av.extent(0), H = av.extent(1), W = av.extent(2);
  Tensor out(av.shape());
  // Index of the row (for the vertical scan over fa) and column (horizontal
  // scan over fb) that supplied each running maximum. Ties go to the cell
  // nearest the output location.
  std::vector<int32_t> arow(av.size()), acol(av.size());
  const bool tl = corner == Corner::top_left;
  for (int64_t c = 0; c < C; ++c) {
    const double* ac = av.data() + c * H * W;
    const double* bc = bv.data() + c * H * W;
    double* oc = out.data() + c * H * W;
    int32_t* arc = arow.data() + c * H * W;
    int32_t* acc = acol.data() + c * H * W;
    // vertical running max over fa: top_left scans bottom-up, bottom_right top-down
    for (int64_t w = 0; w < W; ++w) {
      double best = 0.0;
      int32_t bi = 0;
      for (int64_t step = 0; step < H; ++step) {
        int64_t h = tl ? H - 1 - step : step;
        double v = ac[h * W + w];
        if (step == 0 || v >= best) {
          best = v;
          bi = static_cast<int32_t>(h);
        }
        oc[h * W + w] = best;
        arc[h * W + w] = bi;
      }
    }
    // horizontal running max over fb: top_left scans right-to-left
    for (int64_t h = 0; h < H; ++h) {
      double best = 0.0;
      int32_t bi = 0;
      for (int64_t step = 0; step < W; ++step) {
        int64_t w = tl ? W - 1 - step : step;
        double v = bc[h * W + w];
        if (step == 0 || v >= best) {
          best = v;
          bi = static_cast<int32_t>(w);
        }
        oc[h * W + w] += best;
        acc[h * W + w] = bi;
      }
    }
  }
  int id = t.push(std::move(out), {fa.id, fb.id},
                  [fa, fb, C, H, W, arow = std::move(arow), acol = std::move(acol)](Tape& tp,
                                                                                    int out_id) {
                    const Tensor& g = tp.grad(out_id);
                    Tensor& ga = tp.grad(fa.id);
                    Tensor& gb = tp.grad(fb.id);
                    for (int64_t c = 0; c < C; ++c) {
                      const double* gc = g.data() + c * H * W;
                      double* gac = ga.data() + c * H * W;
                      double* gbc = gb.data() + c * H * W;
                      const int32_t* arc = arow.data() + c * H * W;
                      const int32_t* acc = acol.data() + c * H * W;
                      for (int64_t h = 0; h < H; ++h)
                        for (int64_t w = 0; w < W; ++w) {
                          double gv = gc[h * W + w];
                          gac[arc[h * W + w] * W + w] += gv;
                          gbc[h * W + acc[h * W + w]] += gv;
                        }
                    }
                  });
  return Var{&t, id};
}

Var crop(Var x, int64_t h0, int64_t h1, int64_t w0, int64_t w1) {
  Tape& t = *x.tape;
  const Tensor& xv = x.val();
  check_rank3(xv, "crop");
  const int64_t C = xv.extent(0), H = xv.extent(1), W = xv.extent(2);
  check(0 <= h0 && h0 < h1 && h1 <= H && 0 <= w0 && w0 < w1 && w1 <= W,
        "crop: window [" + std::to_string(h0) + "," + std::to_string(h1) + ")x[" +
            std::to_string(w0) + "," + std::to_string(w1) + ") out of bounds for " +
            shape_str(xv.shape()));
  Tensor out({C, h1 - h0, w1 - w0});
  const int64_t CH = h1 - h0, CW = w1 - w0;
  for (int64_t c = 0; c < C; ++c)
    for (int64_t h = 0; h < CH; ++h)
      std::memcpy(out.data() + (c * CH + h) * CW, xv.data() + (c * H + h0 + h) * W + w0,
                  CW * sizeof(double));
  int id = t.push(std::move(out), {x.id}, [x, h0, w0, C, H, W, CH, CW](Tape& tp, int out_id) {
    const Tensor& g = tp.grad(out_id);
    Tensor& gx = tp.grad(x.id);
    for (int64_t c = 0; c < C; ++c)
      for (int64_t h = 0; h < CH; ++h) {
        const double* grow = g.data() + (c * CH + h) * CW;
        double* gxrow = gx.data() + (c * H + h0 + h) * W + w0;
        for (int64_t w = 0; w < CW; ++w) gxrow[w] += grow[w];
      }
  });
  return Var{&t, id};
}

std::pair<Var, Var> soft_argmax(Var heatmap) {
  Tape& t = *heatmap.tape;
  const Tensor& hv = heatmap.val();
  check_rank3(hv, "soft_argmax");
  check(hv.extent(0) == 1, "soft_argmax: expected a single-channel map");
  const int64_t H = hv.extent(1), W = hv.extent(2);
  Tensor rows({1, H, W}), cols({1, H, W});
  for (int64_t h = 0; h < H; ++h)
    for (int64_t w = 0; w < W; ++w) {
      rows.data()[h * W + w] = static_cast<double>(h);
      cols.data()[h * W + w] = static_cast<double>(w);
    }
  Var total = sum_all(heatmap);
  Var er = div_scalar(sum_all(mul(heatmap, leaf(t, rows))), total);
  Var ec = div_scalar(sum_all(mul(heatmap, leaf(t, cols))), total);
  return {er, ec};
}

GradCheckReport grad_check(const std::function<Var(Tape&, Var)>& fn, const Tensor& point,
                           double tol, double h) {
  GradCheckReport rep;
  Tensor analytic;
  double f0;
  {
    Tape tape;
    Var x = leaf(tape, point.clone());
    Var y = fn(tape, x);
    check(y.val().size() == 1, "grad_check: function must be scalar-valued");
    f0 = y.val().item();
    tape.backward(y.id);
    analytic = tape.grad(x.id).clone();
  }
  if (!std::isfinite(f0)) {
    rep.non_finite = true;
    rep.note = "non-finite function value";
    return rep;
  }
  auto eval = [&](const Tensor& p) {
    Tape tape(false);
    Var x = leaf(tape, p.clone());
    return fn(tape, x).val().item();
  };
  double max_rel = 0.0;
  bool kink = false;
  Tensor probe = point.clone();
  for (int64_t i = 0; i < probe.size(); ++i) {
    double orig = probe.data()[i];
    probe.data()[i] = orig + h;
    double fp = eval(probe);
    probe.data()[i] = orig - h;
    double fm = eval(probe);
    probe.data()[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      rep.non_finite = true;
      continue;
    }
    // Curvature spike: at a kink |f+ + f- - 2 f0| grows like h, not h^2.
    if (std::fabs(fp + fm - 2.0 * f0) > 1e3 * h * h * std::max(1.0, std::fabs(f0))) kink = true;
    double numeric = (fp - fm) / (2.0 * h);
    double a = analytic.data()[i];
    double rel = std::fabs(a - numeric) / std::max({1.0, std::fabs(a), std::fabs(numeric)});
    max_rel = std::max(max_rel, rel);
  }
  rep.max_rel_err = max_rel;
  rep.non_checkable = kink;
  rep.ok = !rep.non_finite && !kink && max_rel < tol;
  if (kink) rep.note = "evaluated at a non-differentiable point";
  return rep;
}

}  // namespace ops
}  // namespace satin
