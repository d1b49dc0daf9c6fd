#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "resonance/nonlinearity.hpp"
#include "resonance/operator_core.hpp"

namespace resonance {

/// Outcome of a check that sampling can refute but, outside the coercivity
/// route, not prove.
enum class Verdict { certified, consistent, failed, not_applicable };

const char* to_string(Verdict v) noexcept;

struct SpectralChecks {
  bool zero_in_spectrum = false;  // some |lambda_i| <= zero_tol
  double nearest_eigenvalue = 0.0;
  bool gap = false;  // delta > 0
  double delta = kInf;
  bool lower_bound = true;  // always in finite dimension
  double gamma = 0.0;
  double zero_tol = 0.0;
};

SpectralChecks check_spectral(const SpectralSplit& split);

struct ThresholdCheck {
  bool ok = false;
  double ratio = 0.0;   // gamma / delta^2 (0 when delta is infinite)
  double margin = 0.0;  // alpha - ratio
};

/// alpha > gamma / delta^2. Throws ContractError for alpha <= 0 or delta <= 0.
ThresholdCheck check_threshold(double alpha, double delta, double gamma);

/// The Schrodinger-type predicate alpha > gamma / delta, reported alongside.
ThresholdCheck check_threshold_linear_delta(double alpha, double delta, double gamma);

struct AlphaAssessment {
  double alpha = 0.0;  // value used downstream
  double estimate = 0.0;
  std::optional<double> claimed;
  bool claimed_confirmed = false;
  int pairs = 0;
  double box = 0.0;
};

/// Sampled cocoercivity over `pairs` pairs in [-box, box]^dim. A claimed alpha
/// is used when the estimate does not contradict it.
AlphaAssessment assess_alpha(const NonlinearMap& n, int pairs = 500, double box = 3.0,
                             std::uint64_t seed = 7, Exec exec = Exec::parallel);

enum class RayKind { kernel, random, rhs };
const char* to_string(RayKind k) noexcept;

struct RayEvidence {
  RayKind kind = RayKind::random;
  int index = 0;
  /// lim sup of <N(t e), t e> / ||t e|| along the schedule (r(t_max), +inf if divergent).
  double radial_slope = 0.0;
  bool radial_infinite = false;
  /// min over scaled points s e of psi(s e) / s^2.
  double coercivity_ratio = 0.0;
  bool sign_ok = false;  // radial_slope > B
  double h_pairing = 0.0;  // <h, e>_w
};

struct KernelEvidence {
  double scale = 1.0;  // ||u||_w
  int basis_index = 0;
  int sign = 1;
  double radial_value = 0.0;  // radial upper bound of J_N(u)
  bool radial_infinite = false;
  double threshold_plain = 0.0;   // B + <h, u>
  double threshold_scaled = 0.0;  // B ||u|| + <h, u>
};

struct SignRecessionReport {
  double bound_B = 0.0;
  bool bound_defined = false;
  std::optional<double> a_claimed;
  bool coercivity_certificate = false;
  double coercivity_min_ratio = 0.0;
  Verdict sign_condition = Verdict::failed;
  Verdict kernel_recession = Verdict::not_applicable;
  Verdict kernel_recession_prime = Verdict::not_applicable;
  bool heuristic = false;  // N not known monotone
  bool monotone_violation = false;
  /// Certificate implies the sampled sign check on every ray.
  bool certificate_consistent = true;
  std::vector<RayEvidence> rays;
  std::vector<KernelEvidence> kernel;
};

struct RaySet {
  std::vector<Eigen::VectorXd> directions;  // unit in the weighted norm
  std::vector<RayKind> kinds;
};

/// Kernel basis vectors (both signs), `random` seeded random directions and
/// +-h/||h||, all normalized in the weighted norm of `n`.
RaySet default_rays(const SpectralSplit& split, const NonlinearMap& n, const Eigen::VectorXd& h,
                    int random = 20, std::uint64_t seed = 11);

struct SignRecessionOptions {
  RadialOptions radial;
  /// Scales s of the coercivity certificate, s = 2^k.
  int certificate_min_exp = -10;
  int certificate_max_exp = 20;
  std::vector<double> kernel_scales{0.25, 0.5, 1.0, 2.0};
  Exec exec = Exec::parallel;
};

/// Throws Error when a ray is not unit length in the weighted norm.
SignRecessionReport check_sign_and_recession(const NonlinearMap& n, const SpectralSplit& split,
                                             const Eigen::VectorXd& h, double alpha,
                                             std::optional<double> a_claimed,
                                             const RaySet& rays,
                                             const SignRecessionOptions& opts = {});

struct HypothesisOptions {
  int alpha_pairs = 500;
  double alpha_box = 3.0;
  int random_rays = 20;
  std::uint64_t seed = 0;
  /// Overrides the sampled alpha.
  std::optional<double> alpha;
  /// Overrides the profile's lower growth constant for the certificate.
  std::optional<double> a_claimed;
  SignRecessionOptions sign;
};

struct HypothesisReport {
  SpectralChecks spectral;
  AlphaAssessment alpha;
  ThresholdCheck threshold;
  ThresholdCheck threshold_linear_delta;
  SignRecessionReport sign;
  bool has_profile = false;
  ProfileCheck profile;
  double norm_h = 0.0;
  bool overall = false;
  /// Every applicable check certified rather than merely consistent.
  bool proof_grade = false;
};

HypothesisReport check_hypotheses(const SpectralSplit& split, const NonlinearMap& n,
                                  const Eigen::VectorXd& h, const HypothesisOptions& opts = {});

}  // namespace resonance
