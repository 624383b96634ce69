// Test-only reference implementations, kept independent of the library code
// paths they check.

#pragma once

#include <span>
#include <vector>

#include "dpfpl/encoder.hpp"
#include "dpfpl/matrix.hpp"
#include "dpfpl/sample.hpp"

namespace dpfpl::testing {

// Brute-force triple-loop product.
Matrix oracle_matmul(const Matrix& a, const Matrix& b);

// Direct sum of squares.
double oracle_frobenius(const Matrix& a);

// Singular values (descending) by one-sided Jacobi rotations; exact enough
// for desk-scale matrices.
std::vector<double> oracle_singular_values(const Matrix& a);

// sqrt(sum of squared singular values beyond the first k): the optimal
// rank-k residual in Frobenius norm.
double oracle_optimal_residual(const Matrix& a, index_t k);

// Gauss-Jordan inverse for small symmetric positive definite systems.
Matrix oracle_inverse(const Matrix& a);

// Projector onto the row space of v: v^T (v v^T)^-1 v.
Matrix oracle_row_projector(const Matrix& v);

// Straight-line recomputation of the prediction probabilities: softmax over
// cos[f(p, c_j), g(x)] / tau, written without reusing library helpers.
std::vector<double> oracle_predict(const Matrix& p_global,
                                   const Matrix& p_local,
                                   const FrozenEncoders& enc,
                                   std::span<const double> raw_image);

// Batch-mean cross-entropy loss recomputed from predict_proba (used as the
// scalar function for finite differences).
double oracle_batch_loss(const Matrix& p_global, const Matrix& p_local_forward,
                         const FrozenEncoders& enc,
                         std::span<const Sample> batch);

// Central finite difference of a scalar function of one matrix entry.
template <typename Fn>
double central_difference(Matrix& m, index_t i, index_t j, double step,
                          Fn&& f) {
  const double saved = m(i, j);
  m(i, j) = saved + step;
  const double up = f();
  m(i, j) = saved - step;
  const double down = f();
  m(i, j) = saved;
  return (up - down) / (2.0 * step);
}

// Deterministic random matrix helper for property tests.
Matrix random_matrix(index_t rows, index_t cols, RngStream& rng,
                     double scale = 1.0);

}  // namespace dpfpl::testing
