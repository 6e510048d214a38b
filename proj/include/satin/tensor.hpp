#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace satin {

[[noreturn]] void fail(const std::string& msg);
void check(bool cond, const std::string& msg);

std::string shape_str(const std::vector<int64_t>& shape);

// Dense row-major tensor of doubles. Feature maps are (C,H,W); conv weights
// are (Cout,Cin,Kh,Kw); vectors are rank 1; scalars are shape {1}.
// The data buffer is shared between copies, and tensors are treated as
// immutable once they leave the function that built them.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape, double fill = 0.0);
  Tensor(std::vector<int64_t> shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  bool defined() const { return data_ != nullptr; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t extent(int axis) const;
  int64_t size() const { return data_ ? static_cast<int64_t>(data_->size()) : 0; }

  double* data() { return data_->data(); }
  const double* data() const { return data_->data(); }

  double item() const;

  // (C,H,W) accessors.
  double& at(int64_t c, int64_t h, int64_t w);
  double at(int64_t c, int64_t h, int64_t w) const;

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  Tensor clone() const;

 private:
  std::vector<int64_t> shape_;
  std::shared_ptr<std::vector<double>> data_;
};

Tensor zeros_like(const Tensor& t);

}  // namespace satin
