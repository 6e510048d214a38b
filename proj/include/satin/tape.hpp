#pragma once

#include <functional>
#include <string>
#include <vector>

#include "satin/tensor.hpp"

namespace satin {

// A learnable (or persistent) tensor. Gradient accumulation happens outside
// the tape so that several tapes (batch elements) can be reduced in a fixed
// order.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;       // allocated lazily
  Tensor velocity;   // SGD momentum buffer, allocated lazily
  bool trainable = true;
};

// Reverse-mode tape. Each recorded node stores its value, the ids of its
// inputs and a backward closure that reads the output gradient and
// accumulates into the input gradients. A tape is confined to one thread.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }

  int push(Tensor value, std::vector<int> inputs, std::function<void(Tape&, int)> backward);
  int leaf(Tensor value);
  int param(Param& p);

  const Tensor& val(int id) const { return values_[id]; }
  int size() const { return static_cast<int>(values_.size()); }

  // Gradient slot, zero-initialized on first touch.
  Tensor& grad(int id);
  bool has_grad(int id) const { return grads_[id].defined(); }

  void backward(int loss_id);

  // Adds this tape's gradients into the Param::grad buffers.
  void accumulate_param_grads();

  // Node ancestry over recorded input edges (used by structural tests).
  bool depends_on(int id, int ancestor) const;

  // Batch-norm statistics computed during the forward pass; the training
  // loop folds them into running stats in a deterministic order.
  struct BnObservation {
    Param* running_mean;
    Param* running_var;
    Tensor mean;
    Tensor var;
    double momentum;
  };
  std::vector<BnObservation> bn_observations;

 private:
  struct Node {
    std::vector<int> inputs;
    std::function<void(Tape&, int)> backward;
  };

  bool recording_;
  std::vector<Tensor> values_;
  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<std::pair<Param*, int>> params_;
};

struct Var {
  Tape* tape = nullptr;
  int id = -1;
  const Tensor& val() const { return tape->val(id); }
  bool defined() const { return tape != nullptr && id >= 0; }
};

}  // namespace satin
