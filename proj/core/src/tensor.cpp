#include "ptp/tensor.hpp"

#include <stdexcept>
#include <string>

namespace ptp::diff {

namespace {

[[noreturn]] void shape_error(const std::string& what) {
  throw std::invalid_argument("tensor: " + what);
}

}  // namespace

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::vector(std::size_t n) { return Tensor({n}, std::vector<double>(n, 0.0)); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols) {
  return Tensor({rows, cols}, std::vector<double>(rows * cols, 0.0));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (values.size() != rows * cols) shape_error("matrix data size does not match shape");
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::zeros_like(const Tensor& t) {
  return Tensor(t.shape_, std::vector<double>(t.data_.size(), 0.0));
}

std::size_t Tensor::rows() const {
  if (rank() == 2) return shape_[0];
  if (rank() == 1) return 1;
  if (rank() == 0) return 1;
  shape_error("rows() on rank > 2");
}

std::size_t Tensor::cols() const {
  if (rank() == 2) return shape_[1];
  if (rank() == 1) return shape_[0];
  if (rank() == 0) return 1;
  shape_error("cols() on rank > 2");
}

double Tensor::item() const {
  if (data_.size() != 1) shape_error("item() on tensor with " + std::to_string(data_.size()) + " elements");
  return data_[0];
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) shape_error("matmul shape mismatch");
  Tensor out = Tensor::matrix(m, n);
  // i-k-j order: the inner loop walks both b and out contiguously, which the
  // compiler vectorizes well; this path dominates network training time
  const double* pa = a.begin();
  const double* pb = b.begin();
  double* po = out.begin();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = pa[i * k + kk];
      if (aik == 0.0) continue;
      const double* brow = pb + kk * n;
      double* orow = po + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Tensor matmul_transposed(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) shape_error("matmul_transposed shape mismatch");
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.begin() + i * k;
    double* orow = out.begin() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.begin() + j * k;
      double acc = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      orow[j] = acc;
    }
  }
  return out;
}

Tensor transposed_matmul(const Tensor& a, const Tensor& b) {
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != k) shape_error("transposed_matmul shape mismatch");
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double* arow = a.begin() + kk * m;
    const double* brow = b.begin() + kk * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* orow = out.begin() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

void add_in_place(Tensor& target, const Tensor& delta) {
  if (!target.same_shape(delta)) shape_error("add_in_place shape mismatch");
  double* t = target.begin();
  const double* d = delta.begin();
  for (std::size_t i = 0; i < target.size(); ++i) t[i] += d[i];
}

void add_scaled(Tensor& target, const Tensor& delta, double s) {
  if (!target.same_shape(delta)) shape_error("add_scaled shape mismatch");
  double* t = target.begin();
  const double* d = delta.begin();
  for (std::size_t i = 0; i < target.size(); ++i) t[i] += s * d[i];
}

}  // namespace ptp::diff
