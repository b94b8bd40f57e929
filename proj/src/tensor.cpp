#include "anchorrank/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace anchorrank {

namespace {
std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  require_shape(element_count(shape_) == data_.size(), "tensor data length does not match shape");
}

Tensor Tensor::vector(std::vector<double> values) {
  const auto n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace anchorrank
