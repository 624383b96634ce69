// Copyright 2026 The dpfpl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpfpl/matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dpfpl {
namespace {

std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

[[noreturn]] void throw_shape(const std::string& op, const Matrix& a,
                              const Matrix& b) {
  throw std::invalid_argument(op + ": incompatible shapes " + shape_of(a) +
                              " and " + shape_of(b));
}

}  // namespace

Matrix::Matrix(index_t rows, index_t cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) {
    throw std::invalid_argument("Matrix: negative dimension " +
                                std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
  data_.assign(static_cast<std::size_t>(rows * cols), 0.0);
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = static_cast<index_t>(rows.size());
  cols_ = rows_ == 0 ? 0 : static_cast<index_t>(rows.begin()->size());
  data_.reserve(static_cast<std::size_t>(rows_ * cols_));
  for (const auto& r : rows) {
    if (static_cast<index_t>(r.size()) != cols_) {
      throw std::invalid_argument("Matrix: ragged initializer rows");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(index_t n) {
  Matrix m(n, n);
  for (index_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw_shape("matmul", a, b);
  Matrix out(a.rows(), b.cols());
  const index_t n = a.rows(), k = a.cols(), m = b.cols();
  for (index_t i = 0; i < n; ++i) {
    double* out_row = out.data() + i * m;
    const double* a_row = a.data() + i * k;
    for (index_t p = 0; p < k; ++p) {
      const double aip = a_row[p];
      if (aip == 0.0) continue;
      const double* b_row = b.data() + p * m;
      for (index_t j = 0; j < m; ++j) out_row[j] += aip * b_row[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (index_t i = 0; i < a.rows(); ++i)
    for (index_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw_shape("add", a, b);
  Matrix out = a;
  for (index_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw_shape("sub", a, b);
  Matrix out = a;
  for (index_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Matrix operator*(const Matrix& a, const Matrix& b) { return matmul(a, b); }

Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (index_t i = 0; i < out.size(); ++i) out.data()[i] *= s;
  return out;
}

Matrix& operator+=(Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw_shape("add", a, b);
  for (index_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
  return a;
}

Matrix& operator-=(Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw_shape("sub", a, b);
  for (index_t i = 0; i < a.size(); ++i) a.data()[i] -= b.data()[i];
  return a;
}

double frobenius_norm(const Matrix& a) {
  double sum = 0.0;
  for (index_t i = 0; i < a.size(); ++i) sum += a.data()[i] * a.data()[i];
  return std::sqrt(sum);
}

double dot(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw_shape("dot", a, b);
  double sum = 0.0;
  for (index_t i = 0; i < a.size(); ++i) sum += a.data()[i] * b.data()[i];
  return sum;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw_shape("max_abs_diff", a, b);
  double worst = 0.0;
  for (index_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

bool all_finite(const Matrix& a) {
  for (index_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a.data()[i])) return false;
  }
  return true;
}

Matrix gaussian_matrix(index_t rows, index_t cols, double sigma,
                       RngStream& rng) {
  if (sigma < 0.0 || !std::isfinite(sigma)) {
    throw std::invalid_argument("gaussian_matrix: sigma must be >= 0, got " +
                                std::to_string(sigma));
  }
  Matrix out(rows, cols);
  if (sigma == 0.0) return out;
  for (index_t i = 0; i < out.size(); ++i) {
    out.data()[i] = sigma * rng.next_gaussian();
  }
  return out;
}

Matrix qr_orthonormalize(const Matrix& a,
                         std::vector<index_t>* dropped_columns) {
  if (a.rows() < a.cols()) {
    throw std::invalid_argument(
        "qr_orthonormalize: need rows >= cols, got " + shape_of(a));
  }
  const index_t m = a.rows(), n = a.cols();
  Matrix q = a;
  std::vector<bool> dropped(static_cast<std::size_t>(n), false);

  auto col_dot = [&](index_t c1, index_t c2) {
    double s = 0.0;
    for (index_t i = 0; i < m; ++i) s += q(i, c1) * q(i, c2);
    return s;
  };

  for (index_t j = 0; j < n; ++j) {
    // Two passes of Gram-Schmidt keep q^T q = I to ~1e-14 on desk-scale
    // inputs.
    for (int pass = 0; pass < 2; ++pass) {
      for (index_t i = 0; i < j; ++i) {
        if (dropped[static_cast<std::size_t>(i)]) continue;
        const double r = col_dot(i, j);
        for (index_t k = 0; k < m; ++k) q(k, j) -= r * q(k, i);
      }
    }
    double norm_sq = 0.0, orig_sq = 0.0;
    for (index_t i = 0; i < m; ++i) {
      norm_sq += q(i, j) * q(i, j);
      orig_sq += a(i, j) * a(i, j);
    }
    const double norm = std::sqrt(norm_sq);
    if (norm <= 1e-10 * std::sqrt(orig_sq)) {
      for (index_t i = 0; i < m; ++i) q(i, j) = 0.0;
      dropped[static_cast<std::size_t>(j)] = true;
      if (dropped_columns != nullptr) dropped_columns->push_back(j);
      continue;
    }
    const double inv = 1.0 / norm;
    for (index_t i = 0; i < m; ++i) q(i, j) *= inv;
  }
  return q;
}

}  // namespace dpfpl
