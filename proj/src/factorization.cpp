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

#include "dpfpl/factorization.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace dpfpl {

FactoredPrompt factorize(const Matrix& p, index_t rank, RngStream& rng) {
  const index_t max_rank = std::min(p.rows(), p.cols());
  if (rank < 1 || rank > max_rank) {
    throw std::invalid_argument(
        "factorize: rank " + std::to_string(rank) + " out of [1, " +
        std::to_string(max_rank) + "] for " + std::to_string(p.rows()) + "x" +
        std::to_string(p.cols()) + " input");
  }
  // Probe is resampled on every call: factorization happens each round with
  // fresh randomness.
  const Matrix probe = gaussian_matrix(p.cols(), rank, 1.0, rng);
  const Matrix sketch = matmul(p, probe);
  FactoredPrompt out;
  out.rank = rank;
  out.u = qr_orthonormalize(sketch);
  out.v = matmul(transpose(out.u), p);
  out.r = p - matmul(out.u, out.v);
  return out;
}

Matrix reconstruct_gradient(const Matrix& grad_u, const Matrix& grad_v,
                            const Matrix& u, const Matrix& v) {
  if (!grad_u.same_shape(u) || !grad_v.same_shape(v) ||
      u.cols() != v.rows()) {
    throw std::invalid_argument(
        "reconstruct_gradient: shape mismatch (grad_u " +
        std::to_string(grad_u.rows()) + "x" + std::to_string(grad_u.cols()) +
        ", grad_v " + std::to_string(grad_v.rows()) + "x" +
        std::to_string(grad_v.cols()) + ", u " + std::to_string(u.rows()) +
        "x" + std::to_string(u.cols()) + ", v " + std::to_string(v.rows()) +
        "x" + std::to_string(v.cols()) + ")");
  }
  const Matrix guv = matmul(grad_u, v);
  Matrix out = guv + matmul(u, grad_v);
  out -= matmul(u, matmul(transpose(u), guv));
  return out;
}

}  // namespace dpfpl
