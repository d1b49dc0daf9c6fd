#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "resonance/kernels.hpp"

namespace resonance {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Real symmetric matrix standing in for the self-adjoint linear part L.
/// Storage is either dense or sparse; the stored matrix is exactly symmetric
/// (the input is symmetrized after the tolerance check).
class SelfAdjointOperator {
 public:
  /// Throws SymmetryError when max |A - A^T| exceeds `symmetry_tol`
  /// (default 1e-12 * max(1, max |A_ij|)).
  static SelfAdjointOperator from_dense(const Eigen::MatrixXd& a,
                                        std::optional<double> symmetry_tol = {});
  static SelfAdjointOperator from_sparse(const Eigen::SparseMatrix<double>& a,
                                         std::optional<double> symmetry_tol = {});
  static SelfAdjointOperator diagonal(const Eigen::VectorXd& d);

  Eigen::Index dim() const noexcept { return dim_; }
  bool is_sparse() const noexcept { return std::holds_alternative<Sparse>(storage_); }
  double symmetry_tol() const noexcept { return symmetry_tol_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x, Exec exec = Exec::parallel) const;
  /// Row i of L x in doubled precision; used for eigenvalue refinement.
  Eigen::VectorXd apply_compensated(const Eigen::VectorXd& x) const;

  Eigen::MatrixXd to_dense() const;
  Eigen::SparseMatrix<double> to_sparse() const;
  const Eigen::MatrixXd* dense_storage() const { return std::get_if<Dense>(&storage_); }
  const Eigen::SparseMatrix<double>* sparse_storage() const {
    return std::get_if<Sparse>(&storage_);
  }

  /// L - sigma I, keeping the storage kind.
  SelfAdjointOperator shifted(double sigma) const;

  double max_abs_entry() const;
  /// Gershgorin enclosure [lo, hi] of the spectrum.
  std::pair<double, double> gershgorin_bounds() const;

 private:
  using Dense = Eigen::MatrixXd;
  using Sparse = Eigen::SparseMatrix<double>;
  SelfAdjointOperator(std::variant<Dense, Sparse> storage, double tol);

  std::variant<Dense, Sparse> storage_;
  Eigen::Index dim_ = 0;
  double symmetry_tol_ = 0.0;
};

enum class Subspace { minus, plus, kernel };

/// Eigendata of L and the induced splitting H = H- (+) H+.
///
/// H- is spanned by eigenvectors with eigenvalue < -zero_tol, H+ by the rest,
/// and ker L (eigenvalues within zero_tol of 0) sits inside H+. With a partial
/// (sparse) decomposition only the lowest eigenpairs are stored; every
/// eigenvalue not stored is >= rest_lower_bound > zero_tol, so H- and ker L are
/// still fully described and P+ = I - P-.
class SpectralSplit {
 public:
  /// Classifies the given eigenpairs. `values` must be ascending and `vectors`
  /// orthonormal columns; no checks are made beyond sizes (see verify_split).
  SpectralSplit(Eigen::VectorXd values, Eigen::MatrixXd vectors, double zero_tol,
                bool complete = true, double rest_lower_bound = kInf);

  Eigen::Index dim() const noexcept { return vectors_.rows(); }
  const Eigen::VectorXd& eigenvalues() const noexcept { return values_; }
  const Eigen::MatrixXd& eigenvectors() const noexcept { return vectors_; }
  double delta() const noexcept { return delta_; }
  double gamma() const noexcept { return gamma_; }
  double zero_tol() const noexcept { return zero_tol_; }
  bool complete() const noexcept { return complete_; }
  double rest_lower_bound() const noexcept { return rest_lower_bound_; }

  const std::vector<Eigen::Index>& idx_minus() const noexcept { return idx_minus_; }
  const std::vector<Eigen::Index>& idx_plus() const noexcept { return idx_plus_; }
  const std::vector<Eigen::Index>& idx_kernel() const noexcept { return idx_kernel_; }

  /// Orthonormal bases of H- and ker L (columns).
  const Eigen::MatrixXd& basis_minus() const noexcept { return basis_minus_; }
  const Eigen::MatrixXd& basis_kernel() const noexcept { return basis_kernel_; }
  const Eigen::VectorXd& minus_eigenvalues() const noexcept { return minus_values_; }

  /// gamma / delta^2 with the convention 0 for an empty H-.
  double gap_ratio() const noexcept;

  /// Eigenvalue of smallest magnitude among the stored ones.
  double nearest_to_zero() const;

  /// Same eigenpairs shifted by -sigma, reclassified with `zero_tol`.
  SpectralSplit shifted(double sigma, double zero_tol) const;

 private:
  Eigen::VectorXd values_;
  Eigen::MatrixXd vectors_;
  double zero_tol_;
  bool complete_;
  double rest_lower_bound_;
  double delta_ = kInf;
  double gamma_ = 0.0;
  std::vector<Eigen::Index> idx_minus_, idx_plus_, idx_kernel_;
  Eigen::MatrixXd basis_minus_, basis_kernel_;
  Eigen::VectorXd minus_values_;
};

enum class EigenBackend { automatic, dense, sparse };

struct DecomposeOptions {
  /// Defaults to 1e-9 * max(1, spectral radius).
  std::optional<double> zero_tol;
  EigenBackend backend = EigenBackend::automatic;
  /// `automatic` switches to the sparse path above this dimension.
  Eigen::Index dense_max_dim = 2500;
  /// Initial number of eigenpairs requested on the sparse path; grown until
  /// the whole non-positive spectrum is captured and certified.
  Eigen::Index sparse_pairs = 200;
  /// Replace eigenvalues at or below the first positive one by compensated
  /// Rayleigh quotients of their eigenvectors.
  bool refine = true;
  std::uint64_t seed = 1;
};

double default_zero_tol(double spectral_radius);

/// Eigendecomposition and H-/H+ splitting. Throws SymmetryError for a
/// non-symmetric operator (see SelfAdjointOperator) and EigenSolverError when the
/// eigensolver fails.
SpectralSplit decompose(const SelfAdjointOperator& op, const DecomposeOptions& opts = {});

Eigen::VectorXd project(const SpectralSplit& split, const Eigen::VectorXd& u, Subspace part);

struct KMinusResult {
  Eigen::VectorXd u;
  /// H- is {0}; `u` is zero.
  bool trivial = false;
};

/// Solves L u = P- w on H- (K = L-^{-1}); ||u|| <= ||P- w|| / delta.
KMinusResult apply_K_minus(const SpectralSplit& split, const Eigen::VectorXd& w);

struct SplitReport {
  double tolerance = 0.0;
  double projector_sum_error = 0.0;      // || P- + P+ - I ||
  double projector_product_error = 0.0;  // || P- P+ ||
  double commutation_error = 0.0;        // max over parts of || L P - P L || / scale
  double orthonormality_error = 0.0;     // || Q^T Q - I ||
  double reconstruction_error = 0.0;     // || L - Q Lambda Q^T || / scale (or || L Q - Q Lambda ||)
  double quadratic_estimate_worst = 0.0; // min over samples of <Lu,u> + gap_ratio ||Lu||^2
  double plus_form_worst = 0.0;          // min over samples of <Lu,u>, u in H+
  bool eigenvalue_range_ok = true;       // sigma(L-) in [-gamma, -delta]
  bool projectors_ok = true;
  bool commutation_ok = true;
  bool orthonormal_ok = true;
  bool reconstruction_ok = true;
  bool quadratic_estimate_ok = true;
  bool plus_nonnegative_ok = true;
  bool all_ok() const {
    return eigenvalue_range_ok && projectors_ok && commutation_ok && orthonormal_ok &&
           reconstruction_ok && quadratic_estimate_ok && plus_nonnegative_ok;
  }
};

/// Checks the split identities and the quadratic lower estimates on
/// `samples` random vectors of H- and H+. Default tolerance 1e-8 * scale where
/// scale = max(1, ||L||_max-entry).
SplitReport verify_split(const SpectralSplit& split, const SelfAdjointOperator& op,
                         int samples = 100, std::uint64_t seed = 0,
                         std::optional<double> tolerance = {});

}  // namespace resonance
