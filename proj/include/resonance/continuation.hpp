#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "resonance/hypothesis.hpp"
#include "resonance/perturbed_solver.hpp"

namespace resonance {

struct MonitorValues {
  bool available = false;  // eps' admissible for the data
  double lhs = 0.0;        // (alpha - (1 + 2 eps') gamma/delta^2) ||N(u)||^2
  double rhs = 0.0;        // ||h|| ||u+|| - eps ||u+||^2
  double slack = 0.0;      // lhs - rhs
  double ratio_value = 0.0;  // ||u-||^2 / max(||u+||, tiny)
  double ratio_bound = kInf;  // ||h|| / (delta^2 alpha - gamma)
  bool ratio_ok = true;       // ratio_value <= 1.1 ratio_bound (soft)
};

struct ContinuationRecord {
  int k = 0;
  double epsilon = 0.0;
  Eigen::VectorXd u;
  double norm_u = 0.0;
  double norm_u_minus = 0.0;
  double norm_u_plus = 0.0;
  double norm_Nu = 0.0;
  // Norms above are weighted; residuals are Euclidean, as in the solver.
  double perturbed_residual = 0.0;
  double unperturbed_residual = 0.0;
  int iterations = 0;
  bool solve_converged = false;
  SolverBackend backend = SolverBackend::newton;
  double strong_monotonicity_C = 0.0;
  MonitorValues monitor;
  /// Cumulative: no slack divergence detected up to and including this record.
  bool monitor_step1_ok = true;
};

enum class ContinuationStatus { converged, norm_blowup, solver_failure, schedule_exhausted };
const char* to_string(ContinuationStatus s) noexcept;

struct ContinuationOptions {
  double eps0 = 1.0;
  double rho = 0.3;
  int k_max = 40;
  /// Unperturbed residual target, relative to max(1, ||h||).
  double tol = 1e-9;
  /// Defaults to 1e6 * max(1, ||h||).
  std::optional<double> norm_cap;
  /// Defaults to default_eps_prime(alpha, delta, gamma).
  std::optional<double> eps_prime;
  /// Perturbed solves run at tol * solve_tol_factor.
  double solve_tol_factor = 0.1;
  PerturbedOptions solver;
  bool keep_iterates = true;
};

struct ContinuationTrace {
  std::vector<ContinuationRecord> records;
  std::optional<Eigen::VectorXd> final_u;
  ContinuationStatus status = ContinuationStatus::schedule_exhausted;
  std::optional<HypothesisReport> hypotheses;
  double alpha = 0.0;
  double eps_prime = 0.0;
  double norm_h = 0.0;
  double norm_cap = 0.0;
  double target = 0.0;
  /// First record index from which |slack| diverges, or -1.
  int slack_divergence_k = -1;
  std::string message;
};

/// A-priori bound slack and ratio monitors of one iterate. Throws ContractError unless
/// (1 + 2 eps') gamma/delta^2 < alpha.
MonitorValues monitor_apriori(const ContinuationRecord& rec, double alpha, double delta,
                              double gamma, double norm_h, double eps_prime);

/// min(0.1, (alpha delta^2 / gamma - 1) / 4); 0.1 when gamma = 0. Nonpositive
/// when the threshold fails.
double default_eps_prime(double alpha, double delta, double gamma);

/// |s_k| >= 100 max(1, |s_0|) and strictly increasing over the last three records.
bool slack_diverging(const std::vector<double>& slacks);

/// eps_k = eps0 rho^k with warm starts; stops on the unperturbed residual, on
/// ||u_k|| > norm_cap, or on a failed perturbed solve. Throws Error for an
/// invalid schedule.
ContinuationTrace solve_resonant(const Problem& p, const ContinuationOptions& opts = {},
                                 std::optional<HypothesisReport> hypotheses = std::nullopt);

}  // namespace resonance
