#include "satin/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace satin {

void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void check(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

std::string shape_str(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

namespace {
int64_t shape_product(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t e : shape) {
    check(e >= 1, "tensor extent must be >= 1, got shape " + shape_str(shape));
    n *= e;
  }
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<int64_t> shape, double fill) : shape_(std::move(shape)) {
  data_ = std::make_shared<std::vector<double>>(shape_product(shape_), fill);
}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<double> data) : shape_(std::move(shape)) {
  check(shape_product(shape_) == static_cast<int64_t>(data.size()),
        "tensor data length " + std::to_string(data.size()) + " does not match shape " +
            shape_str(shape_));
  data_ = std::make_shared<std::vector<double>>(std::move(data));
}

int64_t Tensor::extent(int axis) const {
  check(axis >= 0 && axis < rank(), "axis " + std::to_string(axis) + " out of range for shape " +
                                        shape_str(shape_));
  return shape_[axis];
}

double Tensor::item() const {
  check(size() == 1, "item() on tensor of shape " + shape_str(shape_));
  return (*data_)[0];
}

double& Tensor::at(int64_t c, int64_t h, int64_t w) {
  return (*data_)[(c * shape_[1] + h) * shape_[2] + w];
}

double Tensor::at(int64_t c, int64_t h, int64_t w) const {
  return (*data_)[(c * shape_[1] + h) * shape_[2] + w];
}

Tensor Tensor::clone() const {
  if (!defined()) return Tensor();
  return Tensor(shape_, *data_);
}

Tensor zeros_like(const Tensor& t) { return Tensor(t.shape(), 0.0); }

}  // namespace satin
