#include "resonance/perturbed_solver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "linearized.hpp"
#include "resonance/error.hpp"

namespace resonance {

void Problem::validate() const {
  const Eigen::Index n = op.dim();
  if (split.dim() != n) throw DimensionError("split dimension differs from operator dimension");
  if (this->n.dim() != n) throw DimensionError("nonlinear map dimension differs from operator dimension");
  if (h.size() != n) throw DimensionError("right-hand side has wrong length");
}

const char* to_string(SolverBackend b) noexcept {
  return b == SolverBackend::newton ? "newton" : "picard";
}

const char* to_string(UniquenessStatus s) noexcept {
  switch (s) {
    case UniquenessStatus::unique: return "unique";
    case UniquenessStatus::distinct: return "distinct";
    case UniquenessStatus::inconclusive: return "inconclusive";
  }
  return "unknown";
}

Eigen::VectorXd residual(const Problem& p, double epsilon, const Eigen::VectorXd& u) {
  p.validate();
  if (u.size() != p.op.dim()) throw DimensionError("residual: iterate has wrong length");
  if (!(epsilon >= 0.0)) throw Error("residual: epsilon must be nonnegative");
  Eigen::VectorXd r = p.op.apply(u) + p.n(u) - p.h;
  if (epsilon > 0.0) r += epsilon * project(p.split, u, Subspace::plus);
  return r;
}

double strong_monotonicity_constant(double epsilon, double alpha, double gap_ratio) {
  return std::min(1.0 / epsilon, alpha - gap_ratio);
}

namespace {

double resolve_alpha(const Problem& p, const PerturbedOptions& opts) {
  if (opts.alpha) return *opts.alpha;
  if (p.n.claimed_alpha()) return *p.n.claimed_alpha();
  return estimate_cocoercivity(p.n, sample_pairs(p.n.dim(), 64, 3.0, 0xa1fa), Exec::serial);
}

struct Iterate {
  Eigen::VectorXd u, f;
  double norm = 0.0;
};

Iterate evaluate(const Problem& p, double eps, Eigen::VectorXd u) {
  Iterate it;
  it.f = residual(p, eps, u);
  it.norm = it.f.norm();
  it.u = std::move(u);
  return it;
}

enum class Outcome { converged, stagnated, singular, exhausted };

Outcome newton(const Problem& p, double eps, const PerturbedOptions& opts, double target,
               Iterate& cur, int& iters) {
  detail::LinearizedSystem sys(p.op, p.split, eps);
  int slow = 0;
  for (int k = 0; k < opts.max_iter; ++k) {
    if (cur.norm <= target) return Outcome::converged;
    Jacobian jac = p.n.jacobian(cur.u);
    if (!sys.factor(jac)) {
      // Levenberg-type shift of a singular linearization before giving up.
      bool ok = false;
      double added = 0.0;
      for (double mu = 1e-8; mu <= 1e-2 && !ok; mu *= 100.0) {
        if (jac.diagonal) jac.diag.array() += mu - added;
        else jac.full.diagonal().array() += mu - added;
        added = mu;
        ok = sys.factor(jac);
      }
      if (!ok) return Outcome::singular;
    }
    const Eigen::VectorXd d = -sys.solve(cur.f);
    if (!d.allFinite()) return Outcome::singular;
    ++iters;

    // Armijo on phi = |F|^2 / 2 along a Newton direction: grad phi . d = -2 phi.
    const double phi = 0.5 * cur.norm * cur.norm;
    constexpr double c1 = 1e-4;
    double t = 1.0;
    std::optional<Iterate> next;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      Iterate trial = evaluate(p, eps, cur.u + t * d);
      if (std::isfinite(trial.norm) && 0.5 * trial.norm * trial.norm <= (1.0 - 2.0 * c1 * t) * phi) {
        next = std::move(trial);
        break;
      }
    }
    if (!next) return cur.norm <= target ? Outcome::converged : Outcome::stagnated;
    slow = next->norm > 0.9 * cur.norm ? slow + 1 : 0;
    cur = std::move(*next);
    if (slow >= 10 && cur.norm > target) return Outcome::stagnated;
  }
  return cur.norm <= target ? Outcome::converged : Outcome::exhausted;
}

// u <- u - tau M F(u) with M = (L + eps P+ + (c + mu) I)^{-1}, c = 1/(2 alpha).
Outcome picard(const Problem& p, double eps, double alpha, const PerturbedOptions& opts,
               double target, Iterate& cur, int& iters) {
  const double c = (alpha > 0.0 && std::isfinite(alpha)) ? 0.5 / alpha : (alpha > 0.0 ? 0.0 : 1.0);
  const Eigen::VectorXd& lm = p.split.minus_eigenvalues();
  auto near_singular = [&](double shift) {
    for (Eigen::Index i = 0; i < lm.size(); ++i)
      if (std::abs(lm[i] + shift) < 1e-8 * std::max(1.0, std::abs(shift))) return true;
    return false;
  };
  detail::LinearizedSystem sys(p.op, p.split, eps);
  double mu = 0.0;
  bool ok = false;
  for (int attempt = 0; attempt < 30; ++attempt) {
    if (!near_singular(c + mu) && sys.factor_shift(c + mu)) {
      ok = true;
      break;
    }
    mu = mu == 0.0 ? std::max(c, 1e-3) : 2.0 * mu;
  }
  if (!ok) return Outcome::singular;

  double tau = 1.0;
  Iterate best = cur;
  for (int k = 0; k < opts.max_picard_iter; ++k) {
    if (cur.norm <= target) return Outcome::converged;
    Iterate next = evaluate(p, eps, cur.u - tau * sys.solve(cur.f));
    ++iters;
    if (!std::isfinite(next.norm) || next.norm > 2.0 * best.norm) {
      tau *= 0.5;
      cur = best;
      if (tau < 1e-12) return Outcome::stagnated;
      continue;
    }
    cur = std::move(next);
    if (cur.norm < best.norm) best = cur;
  }
  if (best.norm < cur.norm) cur = best;
  return cur.norm <= target ? Outcome::converged : Outcome::exhausted;
}

}  // namespace

PerturbedSolveResult solve_perturbed(const Problem& p, double epsilon, const PerturbedOptions& opts) {
  p.validate();
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw Error("epsilon must be positive");
  if (!(opts.tol > 0.0)) throw Error("tolerance must be positive");

  PerturbedSolveResult res;
  res.epsilon = epsilon;
  res.alpha = resolve_alpha(p, opts);
  const double ratio = p.split.gap_ratio();
  res.strong_monotonicity_C = strong_monotonicity_constant(epsilon, res.alpha, ratio);
  res.monotone_regime = res.alpha > ratio;
  res.target = opts.tol * std::max(1.0, p.h.norm());

  Eigen::VectorXd u0 = Eigen::VectorXd::Zero(p.op.dim());
  if (opts.start) {
    if (opts.start->size() != p.op.dim()) throw DimensionError("start vector has wrong length");
    u0 = *opts.start;
  }
  Iterate cur = evaluate(p, epsilon, std::move(u0));

  Outcome out;
  res.backend = opts.backend;
  if (opts.backend == SolverBackend::newton) {
    out = newton(p, epsilon, opts, res.target, cur, res.newton_iterations);
    if ((out == Outcome::stagnated || out == Outcome::singular) && opts.allow_fallback) {
      res.fell_back = true;
      res.backend = SolverBackend::picard;
      res.message = out == Outcome::singular ? "singular Jacobian; switched to picard"
                                             : "newton stagnated; switched to picard";
      out = picard(p, epsilon, res.alpha, opts, res.target, cur, res.picard_iterations);
    }
  } else {
    out = picard(p, epsilon, res.alpha, opts, res.target, cur, res.picard_iterations);
  }

  res.iterations = res.newton_iterations + res.picard_iterations;
  res.u = std::move(cur.u);
  res.residual_norm = residual(p, epsilon, res.u).norm();
  res.converged = res.residual_norm <= res.target;
  if (!res.converged) {
    const char* why = out == Outcome::singular   ? "singular linearization"
                      : out == Outcome::stagnated ? "stagnation"
                                                  : "iteration limit reached";
    res.message = res.message.empty() ? why : res.message + "; " + why;
  }
  if (!res.monotone_regime) {
    const char* note = "alpha <= gamma/delta^2: uniqueness not guaranteed";
    res.message = res.message.empty() ? note : res.message + "; " + note;
  }
  return res;
}

UniquenessResult uniqueness_probe(const Problem& p, double epsilon,
                                  const std::vector<Eigen::VectorXd>& starts, double tol,
                                  const PerturbedOptions& opts, Exec exec) {
  if (starts.empty()) throw Error("uniqueness_probe needs at least one start");
  UniquenessResult r;
  r.threshold = tol * std::max(1.0, p.h.norm());
  r.solves.resize(starts.size());
  kernels::for_each_index(
      static_cast<std::ptrdiff_t>(starts.size()),
      [&](std::ptrdiff_t k) {
        PerturbedOptions o = opts;
        o.start = starts[static_cast<std::size_t>(k)];
        r.solves[static_cast<std::size_t>(k)] = solve_perturbed(p, epsilon, o);
      },
      exec);
  bool all_converged = true;
  for (const auto& s : r.solves) all_converged = all_converged && s.converged;
  for (std::size_t i = 0; i < r.solves.size(); ++i)
    for (std::size_t j = i + 1; j < r.solves.size(); ++j)
      r.max_distance = std::max(r.max_distance, (r.solves[i].u - r.solves[j].u).norm());
  if (!all_converged)
    r.status = UniquenessStatus::inconclusive;
  else
    r.status = r.max_distance <= r.threshold ? UniquenessStatus::unique : UniquenessStatus::distinct;
  return r;
}

}  // namespace resonance
