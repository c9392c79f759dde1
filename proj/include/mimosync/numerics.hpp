// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <complex>

#include "mimosync/errors.hpp"

namespace mimosync {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Condition-number ceiling for the normal-equation solves below. Above it
// the matrix is treated as rank deficient.
inline constexpr double kConditionCeiling = 1e12;

// Kronecker product, row-major block convention:
// out((i*p)+k, (j*q)+l) = a(i,j) * b(k,l) for b of size p x q.
CMatrix kron(const CMatrix& a, const CMatrix& b);

// Elementwise product; dimensions must match exactly.
CMatrix hadamard(const CMatrix& a, const CMatrix& b);

// Moore-Penrose pseudo-inverse of a tall full-column-rank matrix via the
// normal equations (A^H A)^{-1} A^H. Throws RankDeficient when the spectral
// condition number of A^H A exceeds `cond_ceiling` (or an eigenvalue is
// nonpositive), DimensionMismatch when rows < cols.
CMatrix pinv(const CMatrix& a, double cond_ceiling = kConditionCeiling);

// Energy of the orthogonal projection of r onto the column space of a:
// ||P_a r||^2, computed from the least-squares fit (the projection matrix is
// never materialized). Same rank/dimension error contract as pinv.
double proj_norm_sq(const CMatrix& a, const CVector& r,
                    double cond_ceiling = kConditionCeiling);

// Reusable projector onto the column space of a fixed tall matrix.
// Factorizes the normal equations once (Cholesky of A^H A, with a spectral
// condition check) so that many right-hand sides can be projected cheaply:
// the grid searches bind one of these per candidate model and stream
// received vectors through it.
class ProjectionSolver {
 public:
  explicit ProjectionSolver(CMatrix a, double cond_ceiling = kConditionCeiling);

  // ||P_A x||^2 = ||Q^H x||^2 where Q = A L^{-H} is the orthonormal basis
  // induced by the Cholesky factor L of A^H A.
  double project_energy(const CVector& x) const;

  // Least-squares coefficients (A^H A)^{-1} A^H x.
  CVector least_squares(const CVector& x) const;

  // Residual x - A (A^H A)^{-1} A^H x.
  CVector residual(const CVector& x) const;

  double condition() const noexcept { return cond_; }
  Eigen::Index rows() const noexcept { return a_.rows(); }
  Eigen::Index cols() const noexcept { return a_.cols(); }
  const CMatrix& matrix() const noexcept { return a_; }

 private:
  CMatrix a_;
  CMatrix basis_adjoint_;  // L^{-1} A^H, rows form an orthonormal basis
  Eigen::LLT<CMatrix> llt_;
  double cond_ = 0.0;
};

}  // namespace mimosync
