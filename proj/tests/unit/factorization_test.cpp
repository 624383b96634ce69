#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dpfpl/factorization.hpp"
#include "../support/oracles.hpp"

using namespace dpfpl;
using testing::oracle_matmul;
using testing::oracle_optimal_residual;
using testing::oracle_row_projector;
using testing::random_matrix;

namespace {

// Eq-style projection oracle: P_u G + G P_v - P_u G P_v with P_u = u u^T and
// P_v = v^T (v v^T)^-1 v, all built from brute-force pieces.
Matrix projection_oracle(const Matrix& g, const Matrix& u, const Matrix& v) {
  const Matrix pu = oracle_matmul(u, transpose(u));
  const Matrix pv = oracle_row_projector(v);
  const Matrix pug = oracle_matmul(pu, g);
  return pug + oracle_matmul(g, pv) - oracle_matmul(pug, pv);
}

// Random matrix with orthonormal rows (k x d, k <= d).
Matrix random_row_orthonormal(index_t k, index_t d, RngStream& rng) {
  return transpose(qr_orthonormalize(random_matrix(d, k, rng)));
}

}  // namespace

TEST_CASE("factorize zero prompt gives zero factors") {
  RngStream rng(21, 0);
  const FactoredPrompt f = factorize(Matrix(4, 8), 2, rng);
  CHECK(frobenius_norm(f.u) == 0.0);
  CHECK(frobenius_norm(f.v) == 0.0);
  CHECK(frobenius_norm(f.r) == 0.0);
}

TEST_CASE("factorize recovers an exact rank-1 matrix in one iteration") {
  RngStream rng(22, 0);
  const Matrix col = random_matrix(6, 1, rng);
  const Matrix row = random_matrix(1, 9, rng);
  const Matrix p = matmul(col, row);
  const FactoredPrompt f = factorize(p, 1, rng);
  CHECK(frobenius_norm(f.r) <= 1e-9 * frobenius_norm(p));
  CHECK(frobenius_norm(p - f.reconstruct()) <=
        1e-9 * (1.0 + frobenius_norm(p)));
}

TEST_CASE("factorize residual is bounded below by the SVD optimum") {
  RngStream rng(23, 0);
  const Matrix p = random_matrix(16, 32, rng);
  const FactoredPrompt f = factorize(p, 8, rng);
  const double optimal = oracle_optimal_residual(p, 8);
  CHECK(frobenius_norm(f.r) >= optimal - 1e-9);
  CHECK(frobenius_norm(p - f.reconstruct()) <=
        1e-9 * (1.0 + frobenius_norm(p)));
}

TEST_CASE("factorize rejects out-of-range ranks") {
  RngStream rng(24, 0);
  const Matrix p(4, 8);
  CHECK_THROWS_AS(factorize(p, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(factorize(p, 5, rng), std::invalid_argument);
}

TEST_CASE("factorize reconstruction and residual orthogonality") {
  RngStream rng(25, 0);
  for (int trial = 0; trial < 25; ++trial) {
    const index_t b = 3 + static_cast<index_t>(rng.next_u64() % 10);
    const index_t d = 3 + static_cast<index_t>(rng.next_u64() % 20);
    const index_t k =
        1 + static_cast<index_t>(rng.next_u64() %
                                 static_cast<std::uint64_t>(std::min(b, d)));
    const Matrix p = random_matrix(b, d, rng);
    const FactoredPrompt f = factorize(p, k, rng);
    CHECK(frobenius_norm(p - f.reconstruct()) <=
          1e-9 * (1.0 + frobenius_norm(p)));
    CHECK(frobenius_norm(matmul(transpose(f.u), f.r)) <=
          1e-9 * (1.0 + frobenius_norm(p)));
    CHECK(frobenius_norm(matmul(transpose(f.u), f.u) - Matrix::identity(k)) <=
          1e-9);
  }
}

TEST_CASE("reconstruct_gradient of zero gradients is zero") {
  RngStream rng(26, 0);
  const Matrix u = qr_orthonormalize(random_matrix(6, 2, rng));
  const Matrix v = random_matrix(2, 8, rng);
  const Matrix out = reconstruct_gradient(Matrix(6, 2), Matrix(2, 8), u, v);
  CHECK(frobenius_norm(out) == 0.0);
}

TEST_CASE("reconstruct_gradient equals the projection oracle") {
  // Identity holds when u has orthonormal columns and v orthonormal rows
  // (the factor layout of the reference RGP construction).
  RngStream rng(27, 0);
  for (int trial = 0; trial < 25; ++trial) {
    const Matrix u = qr_orthonormalize(random_matrix(6, 3, rng));
    const Matrix v = random_row_orthonormal(3, 8, rng);
    const Matrix g = random_matrix(6, 8, rng);
    const Matrix grad_u = matmul(g, transpose(v));
    const Matrix grad_v = matmul(transpose(u), g);
    const Matrix rebuilt = reconstruct_gradient(grad_u, grad_v, u, v);
    CHECK(frobenius_norm(rebuilt - projection_oracle(g, u, v)) <= 1e-9);
  }
}

TEST_CASE("reconstruct_gradient at full rank returns the gradient") {
  RngStream rng(28, 0);
  const index_t b = 5, d = 9;
  const Matrix u = qr_orthonormalize(random_matrix(b, b, rng));
  const Matrix v = matmul(transpose(u), random_matrix(b, d, rng));
  const Matrix g = random_matrix(b, d, rng);
  const Matrix rebuilt = reconstruct_gradient(
      matmul(g, transpose(v)), matmul(transpose(u), g), u, v);
  CHECK(frobenius_norm(rebuilt - g) <= 1e-12 * (1.0 + frobenius_norm(g)));
}

TEST_CASE("reconstruct_gradient is linear in the factor gradients") {
  RngStream rng(29, 0);
  const Matrix u = qr_orthonormalize(random_matrix(7, 3, rng));
  const Matrix v = random_matrix(3, 9, rng);
  for (int trial = 0; trial < 10; ++trial) {
    const double a = rng.next_gaussian(), b = rng.next_gaussian();
    const Matrix x = random_matrix(7, 3, rng), y = random_matrix(7, 3, rng);
    const Matrix z = random_matrix(3, 9, rng), w = random_matrix(3, 9, rng);
    const Matrix lhs =
        reconstruct_gradient(a * x + b * y, a * z + b * w, u, v);
    const Matrix rhs = a * reconstruct_gradient(x, z, u, v) +
                       b * reconstruct_gradient(y, w, u, v);
    CHECK(frobenius_norm(lhs - rhs) <=
          1e-10 * (1.0 + frobenius_norm(lhs) + frobenius_norm(rhs)));
  }
}

TEST_CASE("reconstruct_gradient rejects mismatched shapes") {
  CHECK_THROWS_AS(
      reconstruct_gradient(Matrix(4, 2), Matrix(3, 8), Matrix(4, 2),
                           Matrix(2, 8)),
      std::invalid_argument);
}
