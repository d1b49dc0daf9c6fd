#include "resonance/continuation.hpp"

#include <algorithm>
#include <cmath>

#include "resonance/error.hpp"

namespace resonance {

const char* to_string(ContinuationStatus s) noexcept {
  switch (s) {
    case ContinuationStatus::converged: return "converged";
    case ContinuationStatus::norm_blowup: return "norm_blowup";
    case ContinuationStatus::solver_failure: return "solver_failure";
    case ContinuationStatus::schedule_exhausted: return "schedule_exhausted";
  }
  return "unknown";
}

double default_eps_prime(double alpha, double delta, double gamma) {
  if (gamma == 0.0 || std::isinf(delta)) return 0.1;
  return std::min(0.1, 0.25 * (alpha * delta * delta / gamma - 1.0));
}

MonitorValues monitor_apriori(const ContinuationRecord& rec, double alpha, double delta,
                              double gamma, double norm_h, double eps_prime) {
  const double ratio = (gamma == 0.0 || std::isinf(delta)) ? 0.0 : gamma / (delta * delta);
  if (!(eps_prime > 0.0) || !((1.0 + 2.0 * eps_prime) * ratio < alpha))
    throw ContractError("monitor needs eps' > 0 with (1 + 2 eps') gamma/delta^2 < alpha");
  MonitorValues m;
  m.available = true;
  m.lhs = (alpha - (1.0 + 2.0 * eps_prime) * ratio) * rec.norm_Nu * rec.norm_Nu;
  m.rhs = norm_h * rec.norm_u_plus - rec.epsilon * rec.norm_u_plus * rec.norm_u_plus;
  m.slack = m.lhs - m.rhs;
  m.ratio_value = rec.norm_u_minus * rec.norm_u_minus / std::max(rec.norm_u_plus, 1e-300);
  const double den = delta * delta * alpha - gamma;
  m.ratio_bound = gamma == 0.0 ? 0.0 : (den > 0.0 ? norm_h / den : kInf);
  if (std::isinf(delta)) m.ratio_bound = 0.0;
  m.ratio_ok = m.ratio_value <= 1.1 * m.ratio_bound;
  return m;
}

bool slack_diverging(const std::vector<double>& slacks) {
  const std::size_t k = slacks.size();
  if (k < 4) return false;
  const double a = std::abs(slacks[k - 3]), b = std::abs(slacks[k - 2]), c = std::abs(slacks[k - 1]);
  return c >= 100.0 * std::max(1.0, std::abs(slacks[0])) && a < b && b < c;
}

ContinuationTrace solve_resonant(const Problem& p, const ContinuationOptions& opts,
                                 std::optional<HypothesisReport> hypotheses) {
  p.validate();
  if (!(opts.eps0 > 0.0) || !std::isfinite(opts.eps0)) throw Error("eps0 must be positive");
  if (!(opts.rho > 0.0 && opts.rho < 1.0)) throw Error("rho must lie in (0, 1)");
  if (opts.k_max < 0) throw Error("k_max must be nonnegative");
  if (!(opts.tol > 0.0)) throw Error("tolerance must be positive");
  if (opts.norm_cap && !(*opts.norm_cap > 0.0)) throw Error("norm_cap must be positive");

  ContinuationTrace tr;
  tr.hypotheses = std::move(hypotheses);
  tr.norm_h = p.n.norm(p.h);
  tr.norm_cap = opts.norm_cap.value_or(1e6 * std::max(1.0, tr.norm_h));
  tr.target = opts.tol * std::max(1.0, p.h.norm());

  if (opts.solver.alpha)
    tr.alpha = *opts.solver.alpha;
  else if (tr.hypotheses)
    tr.alpha = tr.hypotheses->alpha.alpha;
  else if (p.n.claimed_alpha())
    tr.alpha = *p.n.claimed_alpha();
  else
    tr.alpha = estimate_cocoercivity(p.n, sample_pairs(p.n.dim(), 64, 3.0, 0xa1fa), Exec::serial);

  const double delta = p.split.delta(), gamma = p.split.gamma();
  tr.eps_prime = opts.eps_prime.value_or(default_eps_prime(tr.alpha, delta, gamma));

  PerturbedOptions so = opts.solver;
  so.alpha = tr.alpha;
  so.tol = opts.tol * opts.solve_tol_factor;

  std::vector<double> slacks;
  bool step1 = true;
  for (int k = 0; k <= opts.k_max; ++k) {
    const double eps = opts.eps0 * std::pow(opts.rho, k);
    const PerturbedSolveResult s = solve_perturbed(p, eps, so);
    ContinuationRecord rec;
    rec.k = k;
    rec.epsilon = eps;
    rec.norm_u = p.n.norm(s.u);
    const Eigen::VectorXd um = project(p.split, s.u, Subspace::minus);
    rec.norm_u_minus = p.n.norm(um);
    rec.norm_u_plus = p.n.norm(s.u - um);
    rec.norm_Nu = p.n.norm(p.n(s.u));
    rec.perturbed_residual = s.residual_norm;
    rec.unperturbed_residual = residual(p, 0.0, s.u).norm();
    rec.iterations = s.iterations;
    rec.solve_converged = s.converged;
    rec.backend = s.backend;
    rec.strong_monotonicity_C = s.strong_monotonicity_C;
    try {
      rec.monitor = monitor_apriori(rec, tr.alpha, delta, gamma, tr.norm_h, tr.eps_prime);
      slacks.push_back(rec.monitor.slack);
      if (slack_diverging(slacks) && step1) {
        step1 = false;
        tr.slack_divergence_k = k;
      }
    } catch (const ContractError&) {
      rec.monitor = MonitorValues{};
    }
    rec.monitor_step1_ok = step1;
    so.start = s.u;
    if (opts.keep_iterates) rec.u = s.u;
    tr.records.push_back(std::move(rec));
    const ContinuationRecord& last = tr.records.back();

    if (!s.converged) {
      tr.status = ContinuationStatus::solver_failure;
      tr.message = "perturbed solve failed at eps = " + std::to_string(eps) + ": " + s.message;
      return tr;
    }
    if (last.norm_u > tr.norm_cap) {
      tr.status = ContinuationStatus::norm_blowup;
      tr.message = "||u_k|| exceeded the norm cap";
      return tr;
    }
    if (last.unperturbed_residual <= tr.target) {
      tr.status = ContinuationStatus::converged;
      tr.final_u = s.u;
      return tr;
    }
  }
  tr.status = ContinuationStatus::schedule_exhausted;
  tr.message = "schedule exhausted before the unperturbed residual reached the target";
  return tr;
}

}  // namespace resonance
