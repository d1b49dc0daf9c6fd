#include "resonance/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "resonance/error.hpp"
#include "resonance/rng.hpp"

namespace resonance {

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::certified: return "certified";
    case Verdict::consistent: return "consistent";
    case Verdict::failed: return "failed";
    case Verdict::not_applicable: return "not_applicable";
  }
  return "unknown";
}

const char* to_string(RayKind k) noexcept {
  switch (k) {
    case RayKind::kernel: return "kernel";
    case RayKind::random: return "random";
    case RayKind::rhs: return "rhs";
  }
  return "unknown";
}

SpectralChecks check_spectral(const SpectralSplit& split) {
  SpectralChecks c;
  c.zero_tol = split.zero_tol();
  c.nearest_eigenvalue = split.nearest_to_zero();
  c.zero_in_spectrum = !split.idx_kernel().empty();
  c.delta = split.delta();
  c.gap = c.delta > 0.0;
  c.gamma = split.gamma();
  c.lower_bound = std::isfinite(c.gamma);
  return c;
}

namespace {

ThresholdCheck threshold_impl(double alpha, double delta, double gamma, int power) {
  if (!(alpha > 0.0)) throw ContractError("alpha must be positive");
  if (!(delta > 0.0)) throw ContractError("delta must be positive");
  if (!(gamma >= 0.0)) throw ContractError("gamma must be nonnegative");
  ThresholdCheck t;
  if (std::isinf(delta) || gamma == 0.0)
    t.ratio = 0.0;
  else
    t.ratio = power == 2 ? gamma / (delta * delta) : gamma / delta;
  t.margin = alpha - t.ratio;
  t.ok = alpha > t.ratio;
  return t;
}

ThresholdCheck failed_threshold(double alpha, double delta, double gamma, int power) {
  ThresholdCheck t;
  if (!(std::isinf(delta) || gamma == 0.0))
    t.ratio = power == 2 ? gamma / (delta * delta) : gamma / delta;
  t.margin = alpha - t.ratio;
  t.ok = false;
  return t;
}

std::vector<double> certificate_scales(const SignRecessionOptions& o) {
  std::vector<double> s;
  for (int k = o.certificate_min_exp; k <= o.certificate_max_exp; ++k) s.push_back(std::ldexp(1.0, k));
  return s;
}

}  // namespace

ThresholdCheck check_threshold(double alpha, double delta, double gamma) {
  return threshold_impl(alpha, delta, gamma, 2);
}

ThresholdCheck check_threshold_linear_delta(double alpha, double delta, double gamma) {
  return threshold_impl(alpha, delta, gamma, 1);
}

AlphaAssessment assess_alpha(const NonlinearMap& n, int pairs, double box, std::uint64_t seed,
                             Exec exec) {
  if (pairs < 1) throw Error("assess_alpha needs at least one pair");
  AlphaAssessment a;
  a.pairs = pairs;
  a.box = box;
  a.estimate = estimate_cocoercivity(n, sample_pairs(n.dim(), pairs, box, seed), exec);
  a.claimed = n.claimed_alpha();
  if (a.claimed) a.claimed_confirmed = a.estimate >= *a.claimed * (1.0 - 1e-9) - 1e-12;
  a.alpha = a.claimed_confirmed ? *a.claimed : a.estimate;
  return a;
}

RaySet default_rays(const SpectralSplit& split, const NonlinearMap& n, const Eigen::VectorXd& h,
                    int random, std::uint64_t seed) {
  RaySet rays;
  auto push = [&](Eigen::VectorXd v, RayKind k) {
    const double nv = n.norm(v);
    if (!(nv > 0.0)) return;
    rays.directions.push_back(v / nv);
    rays.kinds.push_back(k);
  };
  const Eigen::MatrixXd& kb = split.basis_kernel();
  for (Eigen::Index j = 0; j < kb.cols(); ++j) {
    push(kb.col(j), RayKind::kernel);
    push(-kb.col(j), RayKind::kernel);
  }
  Rng rng(seed);
  for (int k = 0; k < random; ++k) push(rng.normal_vector(n.dim()), RayKind::random);
  if (h.size() == n.dim() && n.norm(h) > 0.0) {
    push(h, RayKind::rhs);
    push(-h, RayKind::rhs);
  }
  return rays;
}

SignRecessionReport check_sign_and_recession(const NonlinearMap& n, const SpectralSplit& split,
                                             const Eigen::VectorXd& h, double alpha,
                                             std::optional<double> a_claimed,
                                             const RaySet& rays,
                                             const SignRecessionOptions& opts) {
  if (h.size() != n.dim() || split.dim() != n.dim())
    throw DimensionError("check_sign_and_recession: dimension mismatch");
  if (rays.directions.size() != rays.kinds.size())
    throw Error("ray set: kinds and directions differ in length");
  for (const auto& e : rays.directions) {
    if (e.size() != n.dim()) throw DimensionError("ray has wrong length");
    if (std::abs(n.norm(e) - 1.0) > 1e-8) throw Error("rays must be unit vectors");
  }

  SignRecessionReport rep;
  rep.a_claimed = a_claimed;
  rep.heuristic = !n.known_monotone();
  const double norm_h = n.norm(h);
  const double gamma = split.gamma(), delta = split.delta();
  if (gamma == 0.0) {
    rep.bound_B = 0.0;
    rep.bound_defined = alpha > 0.0;
  } else {
    const double den = delta * delta * alpha - gamma;
    rep.bound_defined = den > 0.0;
    rep.bound_B = rep.bound_defined ? gamma * norm_h / den : kInf;
  }

  const std::vector<double> scales = certificate_scales(opts);
  const std::size_t m = rays.directions.size();
  rep.rays.resize(m);
  std::vector<char> violated(m, 0);
  kernels::for_each_index(
      static_cast<std::ptrdiff_t>(m),
      [&](std::ptrdiff_t k) {
        const auto i = static_cast<std::size_t>(k);
        const Eigen::VectorXd& e = rays.directions[i];
        RayEvidence& ev = rep.rays[i];
        ev.kind = rays.kinds[i];
        ev.index = static_cast<int>(k);
        ev.h_pairing = n.inner(h, e);
        double ratio = kInf;
        for (double s : scales) ratio = std::min(ratio, psi(n, s * e) / (s * s));
        ev.coercivity_ratio = ratio;
        try {
          const RadialResult r = radial_recession(n, e, opts.radial);
          ev.radial_infinite = r.infinite;
          ev.radial_slope = r.infinite ? kInf : r.radial_upper_bound;
        } catch (const ContractError&) {
          violated[i] = 1;
          ev.radial_slope = std::numeric_limits<double>::quiet_NaN();
        }
        ev.sign_ok = rep.bound_defined && ev.radial_slope > rep.bound_B;
      },
      opts.exec);
  rep.monotone_violation = std::any_of(violated.begin(), violated.end(), [](char c) { return c; });

  rep.coercivity_min_ratio = kInf;
  for (const auto& ev : rep.rays) rep.coercivity_min_ratio = std::min(rep.coercivity_min_ratio, ev.coercivity_ratio);
  if (m == 0) rep.coercivity_min_ratio = 0.0;
  rep.coercivity_certificate = a_claimed && *a_claimed > 0.0 && m > 0 && !rep.monotone_violation &&
                               rep.coercivity_min_ratio >= *a_claimed * (1.0 - 1e-10);

  const bool all_sign =
      m > 0 && std::all_of(rep.rays.begin(), rep.rays.end(), [](const RayEvidence& r) { return r.sign_ok; });
  if (!rep.bound_defined || rep.monotone_violation)
    rep.sign_condition = Verdict::failed;
  else if (rep.coercivity_certificate)
    rep.sign_condition = Verdict::certified;
  else
    rep.sign_condition = all_sign ? Verdict::consistent : Verdict::failed;
  rep.certificate_consistent = !rep.coercivity_certificate || all_sign;

  // Kernel directions: the plain test on unit vectors, the norm-scaled one on every scale.
  const Eigen::MatrixXd& kb = split.basis_kernel();
  if (kb.cols() == 0) {
    rep.kernel_recession = Verdict::not_applicable;
    rep.kernel_recession_prime = Verdict::not_applicable;
    return rep;
  }
  struct Item {
    int basis, sign;
    double scale;
  };
  std::vector<Item> items;
  for (Eigen::Index j = 0; j < kb.cols(); ++j)
    for (int sg : {1, -1})
      for (double s : opts.kernel_scales) items.push_back({static_cast<int>(j), sg, s});
  rep.kernel.resize(items.size());
  std::vector<char> kviolated(items.size(), 0);
  RadialOptions ro = opts.radial;
  ro.require_unit = false;
  kernels::for_each_index(
      static_cast<std::ptrdiff_t>(items.size()),
      [&](std::ptrdiff_t k) {
        const auto i = static_cast<std::size_t>(k);
        const Item& it = items[i];
        Eigen::VectorXd e = kb.col(it.basis) * static_cast<double>(it.sign);
        e /= n.norm(e);
        const Eigen::VectorXd u = it.scale * e;
        KernelEvidence& ke = rep.kernel[i];
        ke.scale = it.scale;
        ke.basis_index = it.basis;
        ke.sign = it.sign;
        const double hu = n.inner(h, u);
        ke.threshold_plain = rep.bound_B + hu;
        ke.threshold_scaled = rep.bound_B * it.scale + hu;
        try {
          const RadialResult r = radial_recession(n, u, ro);
          ke.radial_infinite = r.infinite;
          ke.radial_value = r.infinite ? kInf : r.radial_upper_bound;
        } catch (const ContractError&) {
          kviolated[i] = 1;
          ke.radial_value = std::numeric_limits<double>::quiet_NaN();
        }
      },
      opts.exec);
  if (std::any_of(kviolated.begin(), kviolated.end(), [](char c) { return c; }))
    rep.monotone_violation = true;

  auto verdict = [&](bool prime) {
    if (!rep.bound_defined || rep.monotone_violation) return Verdict::failed;
    if (rep.coercivity_certificate) return Verdict::certified;
    for (const auto& ke : rep.kernel) {
      if (!prime && ke.scale != 1.0) continue;
      const double rhs = prime ? ke.threshold_scaled : ke.threshold_plain;
      if (!ke.radial_infinite && !(ke.radial_value > rhs)) return Verdict::failed;
    }
    return Verdict::consistent;
  };
  rep.kernel_recession = verdict(false);
  rep.kernel_recession_prime = verdict(true);
  return rep;
}

HypothesisReport check_hypotheses(const SpectralSplit& split, const NonlinearMap& n,
                                  const Eigen::VectorXd& h, const HypothesisOptions& opts) {
  if (h.size() != n.dim() || split.dim() != n.dim())
    throw DimensionError("check_hypotheses: dimension mismatch");
  HypothesisReport rep;
  rep.spectral = check_spectral(split);
  rep.norm_h = n.norm(h);
  rep.alpha = assess_alpha(n, opts.alpha_pairs, opts.alpha_box, opts.seed + 7, opts.sign.exec);
  if (opts.alpha) rep.alpha.alpha = *opts.alpha;
  const double alpha = rep.alpha.alpha;
  const double delta = rep.spectral.delta, gamma = rep.spectral.gamma;
  if (alpha > 0.0 && delta > 0.0) {
    rep.threshold = check_threshold(alpha, delta, gamma);
    rep.threshold_linear_delta = check_threshold_linear_delta(alpha, delta, gamma);
  } else {
    rep.threshold = failed_threshold(alpha, delta, gamma, 2);
    rep.threshold_linear_delta = failed_threshold(alpha, delta, gamma, 1);
  }

  rep.has_profile = n.profile() != nullptr;
  if (rep.has_profile) rep.profile = check_profile(*n.profile(), n.dim());
  std::optional<double> a = opts.a_claimed;
  if (!a && rep.has_profile && n.profile()->a > 0.0) a = n.profile()->a;

  const RaySet rays = default_rays(split, n, h, opts.random_rays, opts.seed + 11);
  rep.sign = check_sign_and_recession(n, split, h, alpha, a, rays, opts.sign);

  rep.overall = rep.spectral.zero_in_spectrum && rep.spectral.gap && rep.spectral.lower_bound &&
                rep.threshold.ok && rep.sign.sign_condition != Verdict::failed &&
                rep.sign.kernel_recession != Verdict::failed && !rep.sign.monotone_violation &&
                (!rep.has_profile || rep.profile.all());
  rep.proof_grade = rep.overall && rep.sign.sign_condition == Verdict::certified &&
                    rep.sign.kernel_recession != Verdict::consistent &&
                    (opts.alpha.has_value() || rep.alpha.claimed_confirmed);
  return rep;
}

}  // namespace resonance
