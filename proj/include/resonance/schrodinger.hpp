#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "resonance/continuation.hpp"
#include "resonance/hypothesis.hpp"
#include "resonance/nonlinearity.hpp"
#include "resonance/operator_core.hpp"

namespace resonance {

/// Uniform grid of n interior nodes per axis on the box center +- R,
/// spacing h = 2R / (n + 1), node i of an axis at center - R + (i + 1) h.
struct Grid {
  int dimension = 1;
  double half_width = 1.0;
  int n = 3;
  std::array<double, 2> center{0.0, 0.0};

  double spacing() const { return 2.0 * half_width / (n + 1); }
  double left(int axis) const { return center[static_cast<std::size_t>(axis)] - half_width; }
  double length() const { return 2.0 * half_width; }
  Eigen::Index nodes() const;
  double coordinate(int axis, int i) const { return left(axis) + (i + 1) * spacing(); }
  /// Node index to (i, j); j = 0 in 1D. Row-major with the first axis fastest.
  std::array<int, 2> split_index(Eigen::Index node) const;
  /// Throws Error unless dimension is 1 or 2, n >= 3 and R > 0.
  void validate() const;
};

struct Potential {
  std::string kind = "zero";  // zero, finite_well, double_well, cosine
  double depth = 0.0;
  double width = 0.0;
  double separation = 0.0;
  double amplitude = 0.0;
  double period = 1.0;

  static Potential zero() { return {}; }
  static Potential finite_well(double depth, double width);
  static Potential double_well(double depth, double width, double separation);
  static Potential cosine(double amplitude, double period);

  /// Value at (x, y) measured from the box center; y is ignored in 1D.
  double value(double x, double y, int dimension) const;
  std::string describe() const;
};

struct RhsSpec {
  std::string kind = "sin_k";  // sin_k, gaussian, constant, file
  int k = 1;
  std::array<double, 2> center{0.0, 0.0};
  double width = 1.0;
  double value = 0.0;
  std::filesystem::path file;

  static RhsSpec sin_k(int k);
  static RhsSpec gaussian(std::array<double, 2> center, double width);
  static RhsSpec constant(double c);
  static RhsSpec from_file(std::filesystem::path path);
  std::string describe() const;
};

struct SchrodingerProblem {
  Grid grid;
  Potential potential;
  double sigma0 = 0.0;
  /// When set, sigma0 is replaced by the representative of this eigenvalue cluster.
  std::optional<int> gap_index;
  ScalarProfile profile = profiles::linear(0.5);
  RhsSpec rhs;
};

struct Discretization {
  SelfAdjointOperator op;
  Eigen::VectorXd weights;
  Eigen::VectorXd potential;
};

/// Second-order finite differences with Dirichlet truncation, sparse storage:
/// 1D diagonal 2/h^2 + V - sigma0, off-diagonals -1/h^2; 2D five-point stencil.
Discretization discretize(const SchrodingerProblem& problem);

Eigen::VectorXd sample_rhs(const Grid& grid, const RhsSpec& rhs);

/// Closed-form eigenvalues of the zero-potential Dirichlet stencil on one axis,
/// 4/h^2 sin^2(k pi h / (2 l)), k = 1..n.
Eigen::VectorXd fd_laplacian_eigenvalues(int n, double length);

struct GapAlignment {
  double sigma0 = 0.0;
  SelfAdjointOperator op;
  SpectralSplit split;
  int clusters = 0;
};

/// Shifts `op` by the mean of its j-th eigenvalue cluster (consecutive values
/// within zero_tol; j counted from 1), so the shifted operator has 0 at the
/// right end of a gap, and returns the split of the shifted operator.
/// Throws Error when j exceeds the number of clusters.
GapAlignment gap_align(const SelfAdjointOperator& op, int j, double zero_tol,
                       DecomposeOptions opts = {});

struct CaseOptions {
  DecomposeOptions decompose;
  /// Clustering and classification tolerance for gap alignment.
  double align_tol = 1e-8;
  HypothesisOptions hypothesis;
  ContinuationOptions continuation;
};

struct CaseResult {
  double sigma0 = 0.0;
  Eigen::VectorXd weights;
  Eigen::VectorXd h;
  HypothesisReport report;
  ContinuationTrace trace;
  Eigen::VectorXd u;  // final iterate of the trace
  double residual_l2 = 0.0;  // weighted ||S u + f(., u) - h||
  double residual_h1 = 0.0;  // discrete H^1 norm of the same residual
  double delta = 0.0;
  double gamma = 0.0;
  double threshold_linear_delta_margin = 0.0;
};

/// discretize -> gap_align (if requested) -> decompose -> superposition ->
/// hypothesis report -> continuation -> weighted residual norms.
CaseResult run_case(const SchrodingerProblem& problem, const CaseOptions& opts = {});

/// sqrt(sum w r^2 + sum over grid edges (including the Dirichlet boundary) w (dr/h)^2)
double discrete_h1_norm(const Grid& grid, const Eigen::VectorXd& r);

}  // namespace resonance
