#include "dcre/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dcre/error.hpp"

namespace dcre {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    std::ostringstream os;
    os << "matrix data length " << data_.size() << " does not match shape " << rows_
       << "x" << cols_;
    throw ContractViolation(os.str());
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ContractViolation("ragged rows in Matrix::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ContractViolation("matmul: shape mismatch " + shape_string(a) + " times " +
                            shape_string(b));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      axpy(aik, b.row(k), out_row);
    }
  }
  return out;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ContractViolation("matmul_transposed: shape mismatch " + shape_string(a) +
                            " times transpose of " + shape_string(b));
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw ContractViolation("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

std::vector<double> softmax(std::span<const double> v) {
  if (v.empty()) throw ContractViolation("softmax: empty input");
  const double mx = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

std::vector<double> log_softmax(std::span<const double> v) {
  if (v.empty()) throw ContractViolation("log_softmax: empty input");
  const double mx = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double x : v) total += std::exp(x - mx);
  const double lse = mx + std::log(total);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - lse;
  return out;
}

std::vector<Matrix> sgd_step(const std::vector<Matrix>& params,
                             const std::vector<Matrix>& grads, double lr) {
  if (params.size() != grads.size()) {
    throw ContractViolation("sgd_step: " + std::to_string(params.size()) + " params but " +
                            std::to_string(grads.size()) + " gradients");
  }
  std::vector<Matrix> out = params;
  for (std::size_t i = 0; i < out.size(); ++i) sgd_update(out[i], grads[i], lr);
  return out;
}

void sgd_update(Matrix& param, const Matrix& grad, double lr) {
  if (!param.same_shape(grad)) {
    throw ContractViolation("sgd: gradient shape " + shape_string(grad) +
                            " does not match parameter shape " + shape_string(param));
  }
  if (!(lr > 0.0)) throw ContractViolation("sgd: learning rate must be positive");
  axpy(-lr, grad.values(), param.values());
}

GradCheckResult finite_diff_check(const ScalarFn& f, std::vector<Matrix> params,
                                  const std::vector<Matrix>& analytic, double eps) {
  if (eps < 1e-6 || eps > 1e-3) {
    throw ContractViolation("finite_diff_check: epsilon must lie in [1e-6, 1e-3]");
  }
  if (params.size() != analytic.size()) {
    throw ContractViolation("finite_diff_check: tensor count mismatch");
  }
  GradCheckResult worst;
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (!params[t].same_shape(analytic[t])) {
      throw ContractViolation("finite_diff_check: tensor " + std::to_string(t) + " has shape " +
                              shape_string(params[t]) + " but gradient " +
                              shape_string(analytic[t]));
    }
    auto values = params[t].values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = f(params);
      values[i] = saved - eps;
      const double down = f(params);
      values[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("finite_diff_check: non-finite objective probing tensor " +
                           std::to_string(t) + " coordinate " + std::to_string(i));
      }
      const double fd = (up - down) / (2.0 * eps);
      const double an = analytic[t].values()[i];
      const double rel = std::abs(fd - an) / std::max(1e-8, std::abs(fd) + std::abs(an));
      if (rel > worst.max_rel_error) worst = {rel, t, i};
    }
  }
  return worst;
}

}  // namespace dcre
