#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "resonance/kernels.hpp"

namespace resonance {

/// Pointwise nonlinearity f(x, t) of a superposition operator, with the
/// constants it is claimed to satisfy:
///   f(x, 0) = 0 and t -> f(x, t) nondecreasing,
///   a|t| <= |f(x, t)| <= q(x) + b|t|   (a = 0 means no lower-growth claim),
///   |f(x, t) - f(x, t')| <= |t - t'| / alpha.
struct ScalarProfile {
  using Fn = std::function<double(std::ptrdiff_t, double)>;

  std::string name;
  Fn f;
  /// Generalized derivative d/dt f (right-hand slope at kinks). Optional; a
  /// central difference of f is used when absent.
  Fn df;
  double a = 0.0;
  double b = 0.0;
  /// Node-wise offset in the upper growth bound; empty means zero.
  Eigen::VectorXd q;
  double alpha = 0.0;

  double q_at(std::ptrdiff_t node) const { return q.size() ? q[node] : 0.0; }
  double derivative(std::ptrdiff_t node, double t) const;
};

namespace profiles {
/// f(t) = c t
ScalarProfile linear(double c);
/// f(t) = scale * tanh(t); bounded, so no lower-growth claim.
ScalarProfile tanh(double scale);
/// f(t) = (a + (c - a) t^2 / (1 + t^2)) t
ScalarProfile saturating(double a, double c);
/// Monotone table through (0, 0), linear interpolation, linear extrapolation
/// with the end slopes.
ScalarProfile piecewise_table(std::vector<double> t, std::vector<double> f,
                              std::string name = "piecewise_table");
ScalarProfile piecewise_table_file(const std::filesystem::path& path);
}  // namespace profiles

struct ProfileCheck {
  bool zero_at_origin = true;
  bool monotone = true;
  bool lower_growth = true;  // vacuous when a == 0
  bool upper_growth = true;
  bool lipschitz = true;
  bool all() const { return zero_at_origin && monotone && lower_growth && upper_growth && lipschitz; }
};

/// Samples the profile claims on a fixed t-grid at up to 64 nodes of [0, dim).
ProfileCheck check_profile(const ScalarProfile& p, Eigen::Index dim);

struct Jacobian {
  bool diagonal = true;
  Eigen::VectorXd diag;
  Eigen::MatrixXd full;
};

/// The nonlinear operator N on R^dim, with the weighted pairing
/// <x, y>_w = sum_i w_i x_i y_i (unit weights by default).
/// Evaluation must be reentrant.
class NonlinearMap {
 public:
  using Evaluator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using JacobianFn = std::function<Jacobian(const Eigen::VectorXd&)>;

  /// Throws ContractError if N(0) != 0 or if a claimed alpha is contradicted by
  /// a seeded sample of pairs.
  NonlinearMap(Eigen::Index dim, Evaluator eval, std::optional<double> claimed_alpha = {},
               JacobianFn jacobian = {}, Eigen::VectorXd weights = {});

  /// N(u) = c u, cocoercive with alpha = 1/c.
  static NonlinearMap scaled_identity(Eigen::Index dim, double c, Eigen::VectorXd weights = {});

  Eigen::Index dim() const noexcept { return dim_; }
  Eigen::VectorXd operator()(const Eigen::VectorXd& u) const;
  std::optional<double> claimed_alpha() const noexcept { return claimed_alpha_; }
  bool has_jacobian() const noexcept { return static_cast<bool>(jacobian_); }
  /// Analytic Jacobian when available, else central differences with step
  /// 1e-7 * max(1, |u_i|).
  Jacobian jacobian(const Eigen::VectorXd& u) const;
  const ScalarProfile* profile() const noexcept { return profile_.get(); }
  /// Known monotone: backed by a profile or carrying a claimed alpha.
  bool known_monotone() const noexcept { return profile_ || claimed_alpha_.has_value(); }

  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  double inner(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  double norm(const Eigen::VectorXd& x) const;

 private:
  friend NonlinearMap superposition(const ScalarProfile&, const Eigen::VectorXd&);
  Eigen::Index dim_;
  Evaluator eval_;
  std::optional<double> claimed_alpha_;
  JacobianFn jacobian_;
  Eigen::VectorXd weights_;
  std::shared_ptr<const ScalarProfile> profile_;
};

/// (N(u))_i = f(i, u_i) with quadrature weights `weights` (all positive).
/// Throws ContractError when sampling contradicts the profile claims.
NonlinearMap superposition(const ScalarProfile& profile, const Eigen::VectorXd& weights);

using VectorPair = std::pair<Eigen::VectorXd, Eigen::VectorXd>;

/// `count` pairs with entries uniform in [-half_width, half_width].
std::vector<VectorPair> sample_pairs(Eigen::Index dim, int count, double half_width,
                                     std::uint64_t seed);

/// min over pairs of <dN, du>_w / ||dN||_w^2, skipping pairs with dN = 0;
/// +inf if every pair is skipped. Negative values signal non-monotonicity.
double estimate_cocoercivity(const NonlinearMap& n, const std::vector<VectorPair>& pairs,
                             Exec exec = Exec::parallel);

/// psi(u) = <N(u), u>_w
double psi(const NonlinearMap& n, const Eigen::VectorXd& u);

/// t = 2^k, k = 0..40
std::vector<double> default_radial_schedule();

struct RadialOptions {
  std::vector<double> schedule = default_radial_schedule();
  /// Defaults to 1e12 * ||N(u)||_w (1e12 if that is zero).
  std::optional<double> divergence_cap;
  bool require_unit = true;
};

struct RadialResult {
  /// r(t_max) = <N(t_max u), u>_w; an upper bound of J_N(u) along the
  /// constant sequence v_k = u. Meaningless when `infinite`.
  double radial_upper_bound = 0.0;
  bool infinite = false;
  /// N not known to be monotone, so the limit argument is not justified.
  bool heuristic = false;
  std::vector<double> t;
  std::vector<double> r;
  double last_increment = 0.0;
  /// Aitken delta-squared extrapolation from the last three values (NaN if undefined).
  double aitken_limit = 0.0;
};

/// Evaluates r(t) = <N(t u), u>_w along the schedule. Throws ContractError
/// ("monotone contract violated") if r decreases beyond round-off.
RadialResult radial_recession(const NonlinearMap& n, const Eigen::VectorXd& u,
                              const RadialOptions& opts = {});

}  // namespace resonance
