// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>

#include "mimosync/numerics.hpp"
#include "mimosync/rng.hpp"

using namespace mimosync;

namespace {

CMatrix random_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  CMatrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.cgaussian();
  return m;
}

CVector random_vector(int n, std::uint64_t seed) {
  Rng rng(seed);
  CVector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.cgaussian();
  return v;
}

// Independent oracle: pseudo-inverse through a full SVD.
CMatrix svd_pinv(const CMatrix& a) {
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  RVector inv = s;
  for (Eigen::Index i = 0; i < s.size(); ++i) inv[i] = 1.0 / s[i];
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace

TEST_CASE("kron follows the block index convention") {
  CMatrix a = random_matrix(3, 2, 11);
  CMatrix b = random_matrix(4, 5, 12);
  CMatrix k = kron(a, b);
  REQUIRE(k.rows() == 12);
  REQUIRE(k.cols() == 10);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j)
      for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 5; ++q)
          CHECK(k(i * 4 + p, j * 5 + q) == a(i, j) * b(p, q));
}

TEST_CASE("kron with identity produces a block diagonal") {
  CMatrix b = random_matrix(3, 3, 13);
  CMatrix k = kron(CMatrix::Identity(2, 2), b);
  CHECK((k.block(0, 0, 3, 3) - b).norm() == 0.0);
  CHECK((k.block(3, 3, 3, 3) - b).norm() == 0.0);
  CHECK(k.block(0, 3, 3, 3).norm() == 0.0);
  CHECK(k.block(3, 0, 3, 3).norm() == 0.0);
}

TEST_CASE("kron is associative up to numerical precision") {
  CMatrix a = random_matrix(2, 2, 21);
  CMatrix b = random_matrix(2, 3, 22);
  CMatrix c = random_matrix(3, 2, 23);
  CMatrix lhs = kron(kron(a, b), c);
  CMatrix rhs = kron(a, kron(b, c));
  CHECK((lhs - rhs).norm() / lhs.norm() < 1e-14);
}

TEST_CASE("hadamard multiplies elementwise and checks shape") {
  CMatrix a = random_matrix(3, 4, 31);
  CMatrix b = random_matrix(3, 4, 32);
  CMatrix h = hadamard(a, b);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) CHECK(h(i, j) == a(i, j) * b(i, j));
  CHECK_THROWS_AS(hadamard(a, random_matrix(4, 3, 33)), DimensionMismatch);
}

TEST_CASE("pinv matches the SVD oracle on random tall matrices") {
  for (std::uint64_t seed : {41, 42, 43, 44, 45}) {
    CMatrix a = random_matrix(12, 5, seed);
    CMatrix p = pinv(a);
    CMatrix q = svd_pinv(a);
    CHECK((p - q).norm() / q.norm() < 1e-10);
  }
}

TEST_CASE("pinv satisfies the Moore-Penrose identities") {
  CMatrix a = random_matrix(10, 4, 51);
  CMatrix p = pinv(a);
  CHECK((a * p * a - a).norm() / a.norm() < 1e-12);
  CHECK((p * a * p - p).norm() / p.norm() < 1e-12);
  CHECK((a * p - (a * p).adjoint()).norm() < 1e-12);  // projector Hermitian
  CHECK((p * a - CMatrix::Identity(4, 4)).norm() < 1e-12);
}

TEST_CASE("pinv rejects wide and rank-deficient inputs") {
  CHECK_THROWS_AS(pinv(random_matrix(3, 5, 61)), DimensionMismatch);
  CMatrix a = random_matrix(8, 3, 62);
  a.col(2) = a.col(0) + a.col(1);  // exactly dependent columns
  CHECK_THROWS_AS(pinv(a), RankDeficient);
  // A tiny but well-separated column scale must still pass.
  CMatrix b = random_matrix(8, 3, 63);
  b.col(2) *= 1e-3;
  CHECK_NOTHROW(pinv(b));
}

TEST_CASE("proj_norm_sq equals the explicit projector energy") {
  CMatrix a = random_matrix(14, 6, 71);
  CVector r = random_vector(14, 72);
  CMatrix p = a * svd_pinv(a);  // explicit projection matrix
  const double expected = (p * r).squaredNorm();
  CHECK(proj_norm_sq(a, r) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("projection energy is bounded by the vector energy") {
  CMatrix a = random_matrix(16, 5, 81);
  for (std::uint64_t seed : {82, 83, 84}) {
    CVector r = random_vector(16, seed);
    const double e = proj_norm_sq(a, r);
    CHECK(e >= 0.0);
    CHECK(e <= r.squaredNorm() * (1.0 + 1e-12));
  }
}

TEST_CASE("projection of an in-space vector is lossless") {
  CMatrix a = random_matrix(12, 4, 91);
  CVector coeff = random_vector(4, 92);
  CVector r = a * coeff;
  CHECK(proj_norm_sq(a, r) == doctest::Approx(r.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("ProjectionSolver agrees with one-shot helpers") {
  CMatrix a = random_matrix(15, 6, 101);
  ProjectionSolver solver(a);
  for (std::uint64_t seed : {102, 103}) {
    CVector r = random_vector(15, seed);
    CHECK(solver.project_energy(r) ==
          doctest::Approx(proj_norm_sq(a, r)).epsilon(1e-12));
    CVector ls = solver.least_squares(r);
    CVector oracle = svd_pinv(a) * r;
    CHECK((ls - oracle).norm() / oracle.norm() < 1e-10);
    // Residual orthogonal to the column space.
    CVector res = solver.residual(r);
    CHECK((a.adjoint() * res).norm() < 1e-10);
    CHECK(res.squaredNorm() ==
          doctest::Approx(r.squaredNorm() - solver.project_energy(r))
              .epsilon(1e-10));
  }
}

TEST_CASE("projection is idempotent") {
  CMatrix a = random_matrix(13, 5, 111);
  ProjectionSolver solver(a);
  CVector r = random_vector(13, 112);
  CVector projected = a * solver.least_squares(r);
  CHECK(solver.project_energy(projected) ==
        doctest::Approx(projected.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("ProjectionSolver reports the normal-equation condition number") {
  CMatrix a = random_matrix(10, 3, 121);
  ProjectionSolver solver(a);
  Eigen::JacobiSVD<CMatrix> svd(a);
  const auto& s = svd.singularValues();
  const double expected = (s[0] * s[0]) / (s[2] * s[2]);
  CHECK(solver.condition() == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("Rng streams are deterministic and decorrelated by path") {
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) CHECK(a.gaussian() == b.gaussian());
  CHECK(Rng::derive(1, {2, 3}) == Rng::derive(1, {2, 3}));
  CHECK(Rng::derive(1, {2, 3}) != Rng::derive(1, {3, 2}));
  CHECK(Rng::derive(1, {2}) != Rng::derive(2, {2}));
}

TEST_CASE("Rng moments look like the intended distributions") {
  Rng rng(7);
  const int n = 200000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const Complex z = rng.cgaussian();
    sum += z.real() + z.imag();
    sum2 += std::norm(z);
  }
  CHECK(std::abs(sum / (2 * n)) < 0.01);       // zero mean
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.01));  // unit variance
}
