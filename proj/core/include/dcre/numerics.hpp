#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dcre {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);
  /// A 1×n matrix holding `values`.
  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;
  void fill(double v);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// "3x4" style shape string for diagnostics.
std::string shape_string(const Matrix& m);

/// a · b. Throws ContractViolation naming both shapes on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);
/// a · bᵀ.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

double dot(std::span<const double> a, std::span<const double> b);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// Numerically stable softmax (max-subtraction). Throws on empty input.
std::vector<double> softmax(std::span<const double> v);
/// log softmax with the same stabilization.
std::vector<double> log_softmax(std::span<const double> v);

/// Pure SGD: returns p - lr·g for every pair.
std::vector<Matrix> sgd_step(const std::vector<Matrix>& params,
                             const std::vector<Matrix>& grads, double lr);
/// In-place form used by the trainers.
void sgd_update(Matrix& param, const Matrix& grad, double lr);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t tensor = 0;  // tensor holding the worst coordinate
  std::size_t index = 0;   // flat index inside that tensor
};

using ScalarFn = std::function<double(const std::vector<Matrix>&)>;

/// Central-difference gradient check.
///
/// For every coordinate x of every tensor, compares the analytic gradient
/// against (f(x+eps) - f(x-eps)) / (2 eps) with the relative error
/// |g_fd - g_an| / max(1e-8, |g_fd| + |g_an|). Returns the maximum.
/// eps must lie in [1e-6, 1e-3]. A non-finite probe throws NumericError
/// naming the tensor and coordinate.
GradCheckResult finite_diff_check(const ScalarFn& f, std::vector<Matrix> params,
                                  const std::vector<Matrix>& analytic, double eps);

}  // namespace dcre
