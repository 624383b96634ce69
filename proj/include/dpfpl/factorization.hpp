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

#include "dpfpl/matrix.hpp"
#include "dpfpl/rng.hpp"

namespace dpfpl {

// Rank-k factorization of a b x d prompt with an exact residual:
//   p = u v + r, u: b x k with orthonormal (or zero) columns, v = u^T p.
struct FactoredPrompt {
  Matrix u;
  Matrix v;
  Matrix r;
  index_t rank = 0;

  Matrix low_rank() const { return matmul(u, v); }
  Matrix reconstruct() const { return matmul(u, v) + r; }
};

// One power iteration with a fresh Gaussian probe: u = orth(p * probe),
// v = u^T p, r = p - u v. Exact reconstruction holds by construction; the
// residual is orthogonal to the column span of u. An all-zero p yields zero
// u, v and r. Requires 1 <= rank <= min(rows, cols).
FactoredPrompt factorize(const Matrix& p, index_t rank, RngStream& rng);

// Full-rank gradient rebuilt from the low-rank factor gradients:
//   grad_u * v + u * grad_v - u u^T grad_u v.
Matrix reconstruct_gradient(const Matrix& grad_u, const Matrix& grad_v,
                            const Matrix& u, const Matrix& v);

}  // namespace dpfpl
