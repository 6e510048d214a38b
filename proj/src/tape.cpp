#include "satin/tape.hpp"

namespace satin {

int Tape::push(Tensor value, std::vector<int> inputs, std::function<void(Tape&, int)> backward) {
  values_.push_back(std::move(value));
  if (recording_) {
    nodes_.push_back(Node{std::move(inputs), std::move(backward)});
  } else {
    nodes_.push_back(Node{});
  }
  grads_.emplace_back();
  return static_cast<int>(values_.size()) - 1;
}

int Tape::leaf(Tensor value) { return push(std::move(value), {}, nullptr); }

int Tape::param(Param& p) {
  int id = leaf(p.value);
  if (recording_) params_.emplace_back(&p, id);
  return id;
}

Tensor& Tape::grad(int id) {
  if (!grads_[id].defined()) grads_[id] = zeros_like(values_[id]);
  return grads_[id];
}

void Tape::backward(int loss_id) {
  check(recording_, "backward on a non-recording tape");
  check(loss_id >= 0 && loss_id < size(), "backward: bad node id");
  check(values_[loss_id].size() == 1, "backward requires a scalar loss");
  grad(loss_id).data()[0] += 1.0;
  for (int id = loss_id; id >= 0; --id) {
    if (!grads_[id].defined()) continue;
    if (nodes_[id].backward) nodes_[id].backward(*this, id);
  }
}

void Tape::accumulate_param_grads() {
  for (auto& [p, id] : params_) {
    if (!grads_[id].defined()) continue;
    if (!p->grad.defined()) p->grad = zeros_like(p->value);
    const double* g = grads_[id].data();
    double* dst = p->grad.data();
    int64_t n = p->grad.size();
    for (int64_t i = 0; i < n; ++i) dst[i] += g[i];
  }
}

bool Tape::depends_on(int id, int ancestor) const {
  if (id == ancestor) return true;
  std::vector<char> seen(id + 1, 0);
  std::vector<int> stack{id};
  seen[id] = 1;
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    for (int in : nodes_[cur].inputs) {
      if (in == ancestor) return true;
      if (in < static_cast<int>(seen.size()) && !seen[in]) {
        seen[in] = 1;
        stack.push_back(in);
      }
    }
  }
  return false;
}

}  // namespace satin
