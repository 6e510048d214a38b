#include "satin/nn.hpp"

#include <cmath>

namespace satin {

Param* ParamStore::add(const std::string& name, Tensor init, bool trainable) {
  for (auto& p : params_)
    check(p->name != name, "duplicate parameter name: " + name);
  auto p = std::make_unique<Param>();
  p->name = name;
  p->value = std::move(init);
  p->trainable = trainable;
  params_.push_back(std::move(p));
  return params_.back().get();
}

Param* ParamStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

int64_t ParamStore::trainable_count() const {
  int64_t n = 0;
  for (auto& p : params_)
    if (p->trainable) n += p->value.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& p : params_)
    if (p->grad.defined())
      std::fill(p->grad.data(), p->grad.data() + p->grad.size(), 0.0);
}

Tensor uniform_init(const std::vector<int64_t>& shape, int64_t fan_in, Rng& rng) {
  Tensor t(shape);
  double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
  for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-bound, bound);
  return t;
}

Conv2d Conv2d::make(ParamStore& ps, const std::string& name, ops::ConvSpec spec, bool bias,
                    Rng& rng) {
  spec.validate();
  Conv2d c;
  c.spec = spec;
  int64_t cin_eff = spec.mode == ops::ConvMode::depthwise ? 1 : spec.in_channels;
  int64_t fan_in = cin_eff * spec.kernel_h * spec.kernel_w;
  c.w = ps.add(name + ".w",
               uniform_init({spec.out_channels, cin_eff, spec.kernel_h, spec.kernel_w}, fan_in,
                            rng));
  if (bias) c.b = ps.add(name + ".b", Tensor({spec.out_channels}, 0.0));
  return c;
}

Var Conv2d::operator()(Fwd& f, Var x) const {
  Var bias = b ? Var{&f.tape, f.tape.param(*b)} : Var{};
  return ops::conv2d(x, Var{&f.tape, f.tape.param(*w)}, bias, spec);
}

int64_t Conv2d::param_count() const {
  return w->value.size() + (b ? b->value.size() : 0);
}

std::pair<int64_t, int64_t> Conv2d::out_hw(int64_t in_h, int64_t in_w) const {
  return {ops::conv_out_extent(in_h, spec.kernel_h, spec.stride, spec.padding),
          ops::conv_out_extent(in_w, spec.kernel_w, spec.stride, spec.padding)};
}

int64_t Conv2d::macs(int64_t in_h, int64_t in_w) const {
  auto [oh, ow] = out_hw(in_h, in_w);
  int64_t cin_eff = spec.mode == ops::ConvMode::depthwise ? 1 : spec.in_channels;
  return oh * ow * spec.out_channels * cin_eff * spec.kernel_h * spec.kernel_w;
}

BatchNorm2d BatchNorm2d::make(ParamStore& ps, const std::string& name, int64_t channels) {
  BatchNorm2d bn;
  bn.gamma = ps.add(name + ".gamma", Tensor({channels}, 1.0));
  bn.beta = ps.add(name + ".beta", Tensor({channels}, 0.0));
  bn.run_mean = ps.add(name + ".running_mean", Tensor({channels}, 0.0), /*trainable=*/false);
  bn.run_var = ps.add(name + ".running_var", Tensor({channels}, 1.0), /*trainable=*/false);
  return bn;
}

Var BatchNorm2d::operator()(Fwd& f, Var x) const {
  Var g{&f.tape, f.tape.param(*gamma)};
  Var b{&f.tape, f.tape.param(*beta)};
  return ops::batch_norm(x, g, b, run_mean, run_var, f.training, momentum, eps);
}

ConvBnRelu ConvBnRelu::make(ParamStore& ps, const std::string& name, ops::ConvSpec spec,
                            Rng& rng) {
  ConvBnRelu u;
  u.conv = Conv2d::make(ps, name, spec, /*bias=*/false, rng);  // bias is redundant before BN
  u.bn = BatchNorm2d::make(ps, name + ".bn", spec.out_channels);
  return u;
}

Var ConvBnRelu::operator()(Fwd& f, Var x) const { return ops::relu(bn(f, conv(f, x))); }

}  // namespace satin
