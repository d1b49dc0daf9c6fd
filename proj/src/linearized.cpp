#include "linearized.hpp"

#include <cmath>

#include "resonance/error.hpp"

namespace resonance::detail {

namespace {
constexpr Eigen::Index kDenseCutoff = 400;
constexpr double kSingularRcond = 1e-15;
}  // namespace

LinearizedSystem::LinearizedSystem(const SelfAdjointOperator& op, const SpectralSplit& split,
                                   double epsilon)
    : op_(op), split_(split), eps_(epsilon), sparse_(op.is_sparse() && op.dim() > kDenseCutoff) {
  if (!sparse_) {
    const Eigen::MatrixXd& q = split_.basis_minus();
    base_ = op_.to_dense();
    base_.diagonal().array() += eps_;
    if (q.cols() > 0) base_.noalias() -= eps_ * (q * q.transpose());
  }
}

bool LinearizedSystem::factor_dense(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) return false;
  dense_lu_.compute(m);
  const double rc = dense_lu_.rcond();
  return std::isfinite(rc) && rc > kSingularRcond;
}

bool LinearizedSystem::factor_sparse(const Eigen::VectorXd& diag) {
  Eigen::SparseMatrix<double> s = op_.to_sparse();
  Eigen::SparseMatrix<double> d(op_.dim(), op_.dim());
  d.reserve(Eigen::VectorXi::Constant(op_.dim(), 1));
  for (Eigen::Index i = 0; i < op_.dim(); ++i) d.insert(i, i) = eps_ + diag[i];
  s += d;
  s.makeCompressed();
  sparse_lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
  sparse_lu_->analyzePattern(s);
  sparse_lu_->factorize(s);
  if (sparse_lu_->info() != Eigen::Success) return false;
  const Eigen::MatrixXd& q = split_.basis_minus();
  if (q.cols() == 0) return true;
  y_ = sparse_lu_->solve(q);
  if (!y_.allFinite()) return false;
  Eigen::MatrixXd cap = q.transpose() * y_;
  cap.diagonal().array() -= 1.0 / eps_;
  cap_lu_.compute(cap);
  const double rc = cap_lu_.rcond();
  return std::isfinite(rc) && rc > kSingularRcond;
}

bool LinearizedSystem::factor(const Jacobian& j) {
  if (j.diagonal) {
    if (j.diag.size() != op_.dim()) throw DimensionError("Jacobian has wrong size");
    if (sparse_) return factor_sparse(j.diag);
    Eigen::MatrixXd m = base_;
    m.diagonal() += j.diag;
    return factor_dense(m);
  }
  if (j.full.rows() != op_.dim() || j.full.cols() != op_.dim())
    throw DimensionError("Jacobian has wrong size");
  if (sparse_) {
    // A dense Jacobian defeats the sparse factorization; assemble densely.
    sparse_ = false;
    const Eigen::MatrixXd& q = split_.basis_minus();
    base_ = op_.to_dense();
    base_.diagonal().array() += eps_;
    if (q.cols() > 0) base_.noalias() -= eps_ * (q * q.transpose());
  }
  return factor_dense(base_ + j.full);
}

bool LinearizedSystem::factor_shift(double c) {
  Jacobian j;
  j.diag = Eigen::VectorXd::Constant(op_.dim(), c);
  return factor(j);
}

Eigen::VectorXd LinearizedSystem::solve(const Eigen::VectorXd& r) const {
  if (!sparse_) return dense_lu_.solve(r);
  Eigen::VectorXd x = sparse_lu_->solve(r);
  const Eigen::MatrixXd& q = split_.basis_minus();
  if (q.cols() == 0) return x;
  const Eigen::VectorXd c = cap_lu_.solve(Eigen::VectorXd(q.transpose() * x));
  x.noalias() -= y_ * c;
  return x;
}

}  // namespace resonance::detail
