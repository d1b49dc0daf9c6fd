#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "resonance/operator_core.hpp"

namespace resonance::detail {

struct PartialEigenpairs {
  Eigen::VectorXd values;  // ascending
  Eigen::MatrixXd vectors;
  /// Every eigenvalue not returned is >= this value (Sylvester inertia count).
  double rest_lower_bound = kInf;
  double max_residual = 0.0;
};

/// Lowest eigenpairs of a sparse symmetric operator: block Krylov subspace of
/// the shift-inverted operator (L - sigma I)^{-1}, sigma below the Gershgorin
/// bound, followed by Rayleigh-Ritz with L. Grows the number of pairs until the
/// largest returned eigenvalue exceeds `must_exceed`, then certifies through an
/// LDL^T inertia count that no eigenvalue below the returned ones was missed.
PartialEigenpairs lowest_eigenpairs(const SelfAdjointOperator& op, Eigen::Index pairs,
                                    double must_exceed, double residual_tol,
                                    std::uint64_t seed);

}  // namespace resonance::detail
