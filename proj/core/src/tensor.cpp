#include "pcsnn/tensor.hpp"

#include <cmath>
#include <sstream>

namespace pcsnn {

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw Error("negative dimension in shape " + to_string(shape));
    n *= d;
  }
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, float fill)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(numel(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (numel(shape_) != static_cast<std::int64_t>(data_.size())) {
    throw Error("tensor shape " + to_string(shape_) + " does not match " + std::to_string(data_.size()) +
                " values");
  }
}

Tensor Tensor::vector(std::vector<float> values) {
  Shape s{static_cast<std::int64_t>(values.size())};
  return Tensor(std::move(s), std::move(values));
}

std::int64_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw Error("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape_));
  }
  return shape_[axis];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (numel(shape) != static_cast<std::int64_t>(data_.size())) {
    throw Error("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const noexcept {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw Error(std::string("shape mismatch in ") + op + ": " + to_string(a.shape()) + " vs " +
                to_string(b.shape()));
  }
}

}  // namespace

Tensor operator+(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "subtract");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

std::int64_t spatial_size(const Shape& shape) {
  std::int64_t s = 1;
  for (std::size_t i = 2; i < shape.size(); ++i) s *= shape[i];
  return s;
}

}  // namespace pcsnn
