#pragma once

#include <cstddef>
#include <vector>

namespace ptp::diff {

// Dense row-major container for rank 0 (scalar), 1 (vector) or 2 (matrix)
// values. Deliberately minimal: the differentiable ops live in autodiff.hpp
// and only need storage plus a handful of shape-checked helpers.
class Tensor {
 public:
  Tensor() = default;

  static Tensor scalar(double v);
  static Tensor vector(std::size_t n);                        // zero-filled
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols);   // zero-filled
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor zeros_like(const Tensor& t);

  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  // matrix accessors; a vector behaves as 1 x n where convenient
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double item() const;  // value of a single-element tensor; throws otherwise

  double* begin() { return data_.data(); }
  double* end() { return data_.data() + data_.size(); }
  const double* begin() const { return data_.data(); }
  const double* end() const { return data_.data() + data_.size(); }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double v);

 private:
  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {}

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// a * b for [m x k] * [k x n]; throws on shape mismatch
Tensor matmul(const Tensor& a, const Tensor& b);
// a * b' where b is [n x k]
Tensor matmul_transposed(const Tensor& a, const Tensor& b);
// a' * b where a is [k x m]
Tensor transposed_matmul(const Tensor& a, const Tensor& b);

void add_in_place(Tensor& target, const Tensor& delta);          // target += delta
void add_scaled(Tensor& target, const Tensor& delta, double s);  // target += s * delta

}  // namespace ptp::diff
