#include <doctest.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "dpfpl/matrix.hpp"
#include "../support/oracles.hpp"

using namespace dpfpl;
using testing::oracle_frobenius;
using testing::oracle_matmul;
using testing::random_matrix;

TEST_CASE("matmul identity") {
  const Matrix id{{1, 0}, {0, 1}};
  const Matrix b{{3, 4}, {5, 6}};
  const Matrix out = matmul(id, b);
  CHECK(max_abs_diff(out, b) == 0.0);
}

TEST_CASE("matmul 1x2 by 2x1 by hand") {
  const Matrix a{{1, 2}};
  const Matrix b{{3}, {4}};
  const Matrix out = matmul(a, b);
  CHECK(out.rows() == 1);
  CHECK(out.cols() == 1);
  CHECK(out(0, 0) == 11.0);
}

TEST_CASE("matmul matches triple-loop oracle") {
  RngStream rng(11, 0);
  const Matrix a = random_matrix(5, 3, rng);
  const Matrix b = random_matrix(3, 7, rng);
  CHECK(max_abs_diff(matmul(a, b), oracle_matmul(a, b)) <= 1e-12);
}

TEST_CASE("matmul rejects mismatched shapes with a diagnostic") {
  const Matrix a(2, 3), b(4, 5);
  CHECK_THROWS_WITH_AS(matmul(a, b),
                       doctest::Contains("2x3"), std::invalid_argument);
}

TEST_CASE("matmul associativity on random triples") {
  RngStream rng(12, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(4, 6, rng);
    const Matrix b = random_matrix(6, 3, rng);
    const Matrix c = random_matrix(3, 5, rng);
    const double bound = 1e-9 * frobenius_norm(a) * frobenius_norm(b) *
                         frobenius_norm(c);
    CHECK(frobenius_norm(matmul(matmul(a, b), c) -
                         matmul(a, matmul(b, c))) <= bound);
  }
}

TEST_CASE("frobenius norm") {
  CHECK(frobenius_norm(Matrix(3, 3)) == 0.0);
  CHECK(frobenius_norm(Matrix{{3, 4}}) == 5.0);
  RngStream rng(13, 0);
  const Matrix a = random_matrix(4, 4, rng);
  CHECK(frobenius_norm(a) == doctest::Approx(oracle_frobenius(a)).epsilon(1e-12));
  CHECK(frobenius_norm(a) > 0.0);
}

TEST_CASE("gaussian_matrix sigma zero is the zero matrix") {
  RngStream rng(14, 0);
  const Matrix z = gaussian_matrix(2, 2, 0.0, rng);
  CHECK(frobenius_norm(z) == 0.0);
  // No stream consumption for the degenerate distribution.
  RngStream fresh(14, 0);
  CHECK(rng.next_u64() == fresh.next_u64());
}

TEST_CASE("gaussian_matrix sample moments at sigma one") {
  RngStream rng(15, 0);
  const Matrix m = gaussian_matrix(200, 200, 1.0, rng);
  double mean = 0.0;
  for (index_t i = 0; i < m.size(); ++i) mean += m.data()[i];
  mean /= static_cast<double>(m.size());
  double var = 0.0;
  for (index_t i = 0; i < m.size(); ++i) {
    var += (m.data()[i] - mean) * (m.data()[i] - mean);
  }
  var /= static_cast<double>(m.size() - 1);
  CHECK(std::abs(mean) <= 0.02);
  CHECK(std::sqrt(var) >= 0.99);
  CHECK(std::sqrt(var) <= 1.01);
}

TEST_CASE("gaussian_matrix deterministic per (seed, stream, call index)") {
  RngStream a(99, 7), b(99, 7);
  const Matrix first_a = gaussian_matrix(5, 9, 2.5, a);
  const Matrix second_a = gaussian_matrix(3, 3, 0.5, a);
  const Matrix first_b = gaussian_matrix(5, 9, 2.5, b);
  const Matrix second_b = gaussian_matrix(3, 3, 0.5, b);
  CHECK(std::memcmp(first_a.data(), first_b.data(),
                    sizeof(double) * static_cast<std::size_t>(first_a.size())) == 0);
  CHECK(std::memcmp(second_a.data(), second_b.data(),
                    sizeof(double) * static_cast<std::size_t>(second_a.size())) == 0);
}

TEST_CASE("gaussian_matrix rejects negative sigma") {
  RngStream rng(1, 0);
  CHECK_THROWS_AS(gaussian_matrix(2, 2, -1.0, rng), std::invalid_argument);
}

TEST_CASE("qr_orthonormalize fixes orthonormal input up to column sign") {
  RngStream rng(16, 0);
  const Matrix q0 = qr_orthonormalize(random_matrix(6, 3, rng));
  const Matrix q1 = qr_orthonormalize(q0);
  for (index_t j = 0; j < q0.cols(); ++j) {
    double same = 0.0, flipped = 0.0;
    for (index_t i = 0; i < q0.rows(); ++i) {
      same += (q1(i, j) - q0(i, j)) * (q1(i, j) - q0(i, j));
      flipped += (q1(i, j) + q0(i, j)) * (q1(i, j) + q0(i, j));
    }
    CHECK(std::min(same, flipped) <= 1e-24);
  }
}

TEST_CASE("qr_orthonormalize normalizes a single column") {
  const Matrix q = qr_orthonormalize(Matrix{{3}, {4}});
  CHECK(std::abs(std::abs(q(0, 0)) - 0.6) <= 1e-15);
  CHECK(std::abs(std::abs(q(1, 0)) - 0.8) <= 1e-15);
}

TEST_CASE("qr_orthonormalize produces an orthonormal basis") {
  RngStream rng(17, 0);
  const Matrix a = random_matrix(6, 3, rng);
  const Matrix q = qr_orthonormalize(a);
  const Matrix gram = matmul(transpose(q), q);
  CHECK(frobenius_norm(gram - Matrix::identity(3)) <= 1e-10);
  // Span check: a must be reproducible from the basis.
  const Matrix back = matmul(q, matmul(transpose(q), a));
  CHECK(frobenius_norm(back - a) <= 1e-9 * frobenius_norm(a));
}

TEST_CASE("qr_orthonormalize zeroes and reports rank-deficient columns") {
  RngStream rng(18, 0);
  Matrix a = random_matrix(5, 3, rng);
  for (index_t i = 0; i < a.rows(); ++i) a(i, 2) = 2.0 * a(i, 0) - a(i, 1);
  std::vector<index_t> dropped;
  const Matrix q = qr_orthonormalize(a, &dropped);
  REQUIRE(dropped.size() == 1);
  CHECK(dropped[0] == 2);
  for (index_t i = 0; i < q.rows(); ++i) CHECK(q(i, 2) == 0.0);
  CHECK(all_finite(q));
}

TEST_CASE("qr projector idempotence") {
  RngStream rng(19, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix q = qr_orthonormalize(random_matrix(7, 4, rng));
    const Matrix proj = matmul(q, transpose(q));
    CHECK(frobenius_norm(matmul(proj, proj) - proj) <= 1e-9);
  }
}

TEST_CASE("qr_orthonormalize requires rows >= cols") {
  CHECK_THROWS_AS(qr_orthonormalize(Matrix(2, 4)), std::invalid_argument);
}
