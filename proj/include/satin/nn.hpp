#pragma once

#include <memory>
#include <string>
#include <vector>

#include "satin/ops.hpp"
#include "satin/rng.hpp"
#include "satin/tape.hpp"

namespace satin {

// Ordered registry of named parameters. Registration order is the
// serialization and optimizer iteration order.
class ParamStore {
 public:
  Param* add(const std::string& name, Tensor init, bool trainable = true);
  Param* find(const std::string& name);
  const std::vector<std::unique_ptr<Param>>& all() const { return params_; }

  int64_t trainable_count() const;
  void zero_grads();

 private:
  std::vector<std::unique_ptr<Param>> params_;
};

// Forward-pass context: the tape plus the train/eval mode switch.
struct Fwd {
  Tape& tape;
  bool training = false;
};

struct Conv2d {
  ops::ConvSpec spec;
  Param* w = nullptr;
  Param* b = nullptr;

  static Conv2d make(ParamStore& ps, const std::string& name, ops::ConvSpec spec, bool bias,
                     Rng& rng);
  Var operator()(Fwd& f, Var x) const;
  int64_t param_count() const;
  int64_t macs(int64_t in_h, int64_t in_w) const;
  std::pair<int64_t, int64_t> out_hw(int64_t in_h, int64_t in_w) const;
};

struct BatchNorm2d {
  Param* gamma = nullptr;
  Param* beta = nullptr;
  Param* run_mean = nullptr;
  Param* run_var = nullptr;
  double eps = 1e-5;
  double momentum = 0.1;

  static BatchNorm2d make(ParamStore& ps, const std::string& name, int64_t channels);
  Var operator()(Fwd& f, Var x) const;
  int64_t param_count() const { return gamma->value.size() + beta->value.size(); }
};

// conv -> BN -> ReLU, the uniform unit of the backbone.
struct ConvBnRelu {
  Conv2d conv;
  BatchNorm2d bn;

  static ConvBnRelu make(ParamStore& ps, const std::string& name, ops::ConvSpec spec, Rng& rng);
  Var operator()(Fwd& f, Var x) const;
  int64_t param_count() const { return conv.param_count() + bn.param_count(); }
};

Tensor uniform_init(const std::vector<int64_t>& shape, int64_t fan_in, Rng& rng);

}  // namespace satin
