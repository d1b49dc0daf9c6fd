#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "resonance/nonlinearity.hpp"
#include "resonance/operator_core.hpp"

namespace resonance {

/// Non-owning bundle of the data of L u + N(u) = h. `split` must come from `op`.
struct Problem {
  const SelfAdjointOperator& op;
  const SpectralSplit& split;
  const NonlinearMap& n;
  const Eigen::VectorXd& h;

  /// Throws DimensionError on mismatched sizes.
  void validate() const;
};

/// eps P+ u + L u + N(u) - h; eps = 0 gives the unperturbed residual.
Eigen::VectorXd residual(const Problem& p, double epsilon, const Eigen::VectorXd& u);

enum class SolverBackend { newton, picard };
const char* to_string(SolverBackend b) noexcept;

struct PerturbedOptions {
  double tol = 1e-10;
  int max_iter = 200;
  int max_picard_iter = 10000;
  SolverBackend backend = SolverBackend::newton;
  /// Picard after Newton stagnation or a singular Jacobian.
  bool allow_fallback = true;
  std::optional<Eigen::VectorXd> start;
  /// Cocoercivity constant for C and the Picard preconditioner; defaults to the
  /// map's claimed alpha, else a 64-pair estimate.
  std::optional<double> alpha;
};

struct PerturbedSolveResult {
  Eigen::VectorXd u;
  double epsilon = 0.0;
  double residual_norm = 0.0;
  double target = 0.0;  // tol * max(1, ||h||)
  int iterations = 0;
  int newton_iterations = 0;
  int picard_iterations = 0;
  bool converged = false;
  double alpha = 0.0;
  /// min{1/eps, alpha - gamma/delta^2}
  double strong_monotonicity_C = 0.0;
  /// alpha > gamma/delta^2
  bool monotone_regime = false;
  SolverBackend backend = SolverBackend::newton;
  bool fell_back = false;
  std::string message;
};

double strong_monotonicity_constant(double epsilon, double alpha, double gap_ratio);

/// Solves eps P+ u + L u + N(u) = h for eps > 0. Throws Error for eps <= 0.
/// Nonconvergence is reported through `converged`, with the best iterate.
PerturbedSolveResult solve_perturbed(const Problem& p, double epsilon,
                                     const PerturbedOptions& opts = {});

enum class UniquenessStatus { unique, distinct, inconclusive };
const char* to_string(UniquenessStatus s) noexcept;

struct UniquenessResult {
  UniquenessStatus status = UniquenessStatus::inconclusive;
  double max_distance = 0.0;
  double threshold = 0.0;
  std::vector<PerturbedSolveResult> solves;
};

/// Solves from every start (concurrently) and compares the converged solutions
/// against tol * max(1, ||h||).
UniquenessResult uniqueness_probe(const Problem& p, double epsilon,
                                  const std::vector<Eigen::VectorXd>& starts, double tol,
                                  const PerturbedOptions& opts = {}, Exec exec = Exec::parallel);

}  // namespace resonance
