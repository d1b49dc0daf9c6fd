#pragma once

#include <memory>

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "resonance/nonlinearity.hpp"
#include "resonance/operator_core.hpp"

namespace resonance::detail {

/// Factorizations of A = L + eps P+ + J with J a diagonal or dense matrix.
/// Dense storage factors A directly; sparse storage factors L + eps I + J and
/// applies the rank-m correction -eps Q- Q-^T through the Woodbury identity.
class LinearizedSystem {
 public:
  LinearizedSystem(const SelfAdjointOperator& op, const SpectralSplit& split, double epsilon);

  /// False when A is numerically singular.
  bool factor(const Jacobian& j);
  bool factor_shift(double c);
  Eigen::VectorXd solve(const Eigen::VectorXd& r) const;

 private:
  const SelfAdjointOperator& op_;
  const SpectralSplit& split_;
  double eps_;
  bool sparse_;
  Eigen::MatrixXd base_;  // dense: L + eps P+
  Eigen::PartialPivLU<Eigen::MatrixXd> dense_lu_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> sparse_lu_;
  Eigen::MatrixXd y_;  // S^{-1} Q-
  Eigen::PartialPivLU<Eigen::MatrixXd> cap_lu_;

  bool factor_dense(const Eigen::MatrixXd& m);
  bool factor_sparse(const Eigen::VectorXd& diag);
};

}  // namespace resonance::detail
