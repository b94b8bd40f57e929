#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace anchorrank {

/// Row-major dense array of doubles. Rank is 1 or 2 in practice.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  std::span<double> row(std::size_t r) { return std::span<double>(data_).subspan(r * cols(), cols()); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
  }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double v);
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

void require_shape(bool ok, const std::string& what);

}  // namespace anchorrank
