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

#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "dpfpl/rng.hpp"

namespace dpfpl {

using index_t = std::int64_t;

// Dense row-major matrix of 64-bit reals. Library operations treat matrices
// as immutable values and return fresh results; all public operations keep
// entries finite given finite inputs. Sizes at desk scale stay below
// 64x512, so there is no blocked or sparse storage.
class Matrix {
 public:
  Matrix() = default;
  Matrix(index_t rows, index_t cols);  // zero-filled
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix zero(index_t rows, index_t cols) { return Matrix(rows, cols); }
  static Matrix identity(index_t n);

  index_t rows() const { return rows_; }
  index_t cols() const { return cols_; }
  index_t size() const { return rows_ * cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(index_t i, index_t j) { return data_[i * cols_ + j]; }
  double operator()(index_t i, index_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }
  std::span<const double> row(index_t i) const {
    return std::span<const double>(data_.data() + i * cols_, cols_);
  }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  index_t rows_ = 0;
  index_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);  // matmul
Matrix operator*(double s, const Matrix& a);
Matrix& operator+=(Matrix& a, const Matrix& b);
Matrix& operator-=(Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& a);

// Elementwise inner product <a, b>.
double dot(const Matrix& a, const Matrix& b);

double max_abs_diff(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& a);

// i.i.d. N(0, sigma^2) entries in row-major draw order; sigma = 0 returns the
// zero matrix without consuming the stream. Rejects negative sigma.
Matrix gaussian_matrix(index_t rows, index_t cols, double sigma,
                       RngStream& rng);

// Orthonormal basis of the column span via modified Gram-Schmidt with one
// re-orthogonalization pass. Requires rows >= cols. Columns beyond the
// numerical rank are replaced by zeros; their indices are appended to
// *dropped_columns when provided.
Matrix qr_orthonormalize(const Matrix& a,
                         std::vector<index_t>* dropped_columns = nullptr);

}  // namespace dpfpl
