// SPDX-License-Identifier: Apache-2.0
#include "mimosync/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <string>

namespace mimosync {

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CMatrix hadamard(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionMismatch("hadamard: " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " vs " +
                            std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()));
  return a.cwiseProduct(b);
}

namespace {

// Spectral condition number of the Hermitian normal matrix H = A^H A.
// Throws RankDeficient if H is numerically singular or too ill conditioned.
double checked_condition(const CMatrix& h, double cond_ceiling) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(h, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw RankDeficient("normal matrix eigensolve failed");
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || !(hi > 0.0))
    throw RankDeficient("normal matrix not positive definite (min eigenvalue " +
                        std::to_string(lo) + ")");
  const double cond = hi / lo;
  if (cond > cond_ceiling)
    throw RankDeficient("condition number " + std::to_string(cond) +
                        " exceeds ceiling " + std::to_string(cond_ceiling));
  return cond;
}

}  // namespace

ProjectionSolver::ProjectionSolver(CMatrix a, double cond_ceiling)
    : a_(std::move(a)) {
  if (a_.rows() < a_.cols())
    throw DimensionMismatch("projection basis is wide: " +
                            std::to_string(a_.rows()) + "x" +
                            std::to_string(a_.cols()));
  if (a_.cols() == 0) throw DimensionMismatch("projection basis has no columns");
  const CMatrix h = a_.adjoint() * a_;
  cond_ = checked_condition(h, cond_ceiling);
  llt_.compute(h);
  if (llt_.info() != Eigen::Success)
    throw RankDeficient("Cholesky of normal matrix failed");
  basis_adjoint_ = llt_.matrixL().solve(a_.adjoint());
}

double ProjectionSolver::project_energy(const CVector& x) const {
  if (x.size() != a_.rows())
    throw DimensionMismatch("project_energy: vector length " +
                            std::to_string(x.size()) + " vs " +
                            std::to_string(a_.rows()) + " rows");
  return (basis_adjoint_ * x).squaredNorm();
}

CVector ProjectionSolver::least_squares(const CVector& x) const {
  if (x.size() != a_.rows())
    throw DimensionMismatch("least_squares: vector length " +
                            std::to_string(x.size()) + " vs " +
                            std::to_string(a_.rows()) + " rows");
  return llt_.solve(a_.adjoint() * x);
}

CVector ProjectionSolver::residual(const CVector& x) const {
  return x - a_ * least_squares(x);
}

CMatrix pinv(const CMatrix& a, double cond_ceiling) {
  if (a.rows() < a.cols())
    throw DimensionMismatch("pinv expects rows >= cols, got " +
                            std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()));
  if (a.cols() == 0) throw DimensionMismatch("pinv of empty matrix");
  const CMatrix h = a.adjoint() * a;
  checked_condition(h, cond_ceiling);
  Eigen::LLT<CMatrix> llt(h);
  if (llt.info() != Eigen::Success)
    throw RankDeficient("Cholesky of normal matrix failed");
  return llt.solve(a.adjoint());
}

double proj_norm_sq(const CMatrix& a, const CVector& r, double cond_ceiling) {
  return ProjectionSolver(a, cond_ceiling).project_energy(r);
}

}  // namespace mimosync
