// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "oracles.hpp"
#include "resonance/continuation.hpp"
#include "resonance/error.hpp"
#include "resonance/hypothesis.hpp"
#include "resonance/io.hpp"
#include "resonance/perturbed_solver.hpp"
#include "resonance/rng.hpp"
#include "resonance/schrodinger.hpp"

using namespace resonance;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// Q diag(values) Q^T with a random orthogonal Q (QR of a Gaussian matrix).
Eigen::MatrixXd planted(Rng& rng, const Eigen::VectorXd& values) {
  const Eigen::Index n = values.size();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd a = q * values.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

// 1. Spectral split invariants on random symmetric matrices.
Outcome spectral_suite() {
  const auto t0 = Clock::now();
  Rng rng(101);
  Outcome o;
  double worst_proj = 0.0, worst_quad = 0.0;
  for (int m = 0; m < 50; ++m) {
    const int n = 2 + static_cast<int>(rng.uniform() * 199.0);
    Eigen::MatrixXd a;
    if (m % 2 == 0) {
      a.resize(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.normal();
    } else {
      // Planted spectrum with a kernel, so every part of the split is populated.
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i) v[i] = rng.uniform(-5.0, 5.0);
      v[0] = 0.0;
      if (n > 3) v[1] = 0.0;
      a = planted(rng, v);
    }
    const auto op = SelfAdjointOperator::from_dense(a);
    DecomposeOptions d;
    if (m % 2 == 1) d.zero_tol = 1e-9 * std::max(1.0, 5.0);
    const SpectralSplit s = decompose(op, d);
    const SplitReport r = verify_split(s, op, 100, static_cast<std::uint64_t>(m));
    worst_proj = std::max({worst_proj, r.projector_sum_error, r.projector_product_error});
    worst_quad = std::min(worst_quad, r.quadratic_estimate_worst);
    bool range = true;
    for (Eigen::Index i = 0; i < s.minus_eigenvalues().size(); ++i) {
      const double l = s.minus_eigenvalues()[i];
      if (l < -s.gamma() || l > -s.delta()) range = false;
    }
    if (!r.all_ok() || !range || r.projector_sum_error > 1e-10 || r.projector_product_error > 1e-10) {
      o.pass = false;
      o.detail += " matrix " + std::to_string(m) + " (n=" + std::to_string(n) + ") failed;";
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 30.0) o.pass = false;
  o.detail = "50 matrices, max projector error " + fmt(worst_proj) + ", worst quadratic slack " +
             fmt(worst_quad) + ", " + fmt(secs) + " s" + o.detail;
  return o;
}

// 2. Closed-form diagonal problem.
Outcome diagonal_closed_form() {
  const Eigen::Vector3d lambda(-1, 0, 2), h(1, 1, 1);
  const auto op = SelfAdjointOperator::diagonal(lambda);
  const SpectralSplit split = decompose(op);
  const auto n = superposition(profiles::linear(0.5), Eigen::VectorXd::Ones(3));
  const Eigen::VectorXd hv = h;
  const Problem p{op, split, n, hv};
  Outcome o;
  double worst = 0.0;
  for (double eps : {1.0, 0.1, 0.01}) {
    PerturbedOptions po;
    po.tol = 1e-14;
    const PerturbedSolveResult r = solve_perturbed(p, eps, po);
    for (int i = 0; i < 3; ++i) {
      const double exact = h[i] / (lambda[i] + (lambda[i] >= 0 ? eps : 0.0) + 0.5);
      worst = std::max(worst, std::abs(r.u[i] - exact));
    }
    if (!r.converged) o.pass = false;
  }
  if (worst > 1e-10) o.pass = false;
  ContinuationOptions co;
  co.tol = 1e-11;
  co.k_max = 60;
  const ContinuationTrace t = solve_resonant(p, co);
  double lim = kInf;
  if (t.final_u) lim = (*t.final_u - Eigen::Vector3d(-2, 2, 0.4)).cwiseAbs().maxCoeff();
  if (t.status != ContinuationStatus::converged || !(lim <= 1e-9)) o.pass = false;
  o.detail = "perturbed max error " + fmt(worst) + ", limit error " + fmt(lim) + " (" +
             to_string(t.status) + " after " + std::to_string(t.records.size()) + " steps)";
  return o;
}

struct RandomProblem {
  SelfAdjointOperator op;
  SpectralSplit split;
  NonlinearMap n;
  Eigen::VectorXd h;
  Problem view() const { return {op, split, n, h}; }
};

// Random planted operator with a kernel and a compliant saturating profile.
RandomProblem compliant_problem(Rng& rng, int dim) {
  const int neg = 1 + static_cast<int>(rng.uniform() * (dim / 3));
  Eigen::VectorXd v(dim);
  const double delta = rng.uniform(0.5, 2.0), gamma = delta * rng.uniform(1.0, 3.0);
  for (int i = 0; i < dim; ++i) {
    if (i < neg) v[i] = -rng.uniform(delta, gamma);
    else if (i == neg) v[i] = 0.0;
    else v[i] = rng.uniform(0.2, 6.0);
  }
  v[0] = -delta;
  if (neg > 1) v[1] = -gamma;
  auto op = SelfAdjointOperator::from_dense(planted(rng, v));
  DecomposeOptions d;
  d.zero_tol = 1e-8;
  SpectralSplit split = decompose(op, d);
  // alpha = 1 / (a + (c - a) 9/8) must exceed gamma / delta^2.
  const double ratio = split.gap_ratio();
  const double lip = 0.8 / std::max(ratio, 0.5);
  const double a = 0.3 * lip, c = a + (lip - a) * 8.0 / 9.0;
  auto n = superposition(profiles::saturating(a, c), Eigen::VectorXd::Ones(dim));
  Eigen::VectorXd h = rng.normal_vector(dim);
  return {std::move(op), std::move(split), std::move(n), std::move(h)};
}

// 3. Uniqueness of the perturbed solution from several starts.
Outcome uniqueness_suite() {
  Rng rng(303);
  Outcome o;
  double worst = 0.0;
  int failures = 0;
  for (int m = 0; m < 20; ++m) {
    const int dim = 3 + static_cast<int>(rng.uniform() * 48.0);
    const RandomProblem rp = compliant_problem(rng, dim);
    if (!(rp.n.claimed_alpha().value_or(0.0) > rp.split.gap_ratio())) {
      ++failures;
      continue;
    }
    const std::vector<Eigen::VectorXd> starts{Eigen::VectorXd::Zero(dim), rng.uniform_vector(dim, -10, 10),
                                              rng.uniform_vector(dim, -10, 10)};
    for (double eps : {0.5, 0.05, 0.005}) {
      PerturbedOptions po;
      po.tol = 1e-13;
      const UniquenessResult r = uniqueness_probe(rp.view(), eps, starts, 1e-13, po);
      bool all_conv = true;
      for (const auto& s : r.solves) all_conv = all_conv && s.converged;
      worst = std::max(worst, r.max_distance);
      if (!all_conv || r.max_distance > 1e-8) ++failures;
    }
  }
  o.pass = failures == 0;
  o.detail = "20 problems x 3 eps, max pairwise distance " + fmt(worst) + ", failures " + std::to_string(failures);
  return o;
}

// 4. Brute-force multi-start Newton oracle at dim <= 4.
Outcome oracle_equivalence() {
  Rng rng(404);
  Outcome o;
  double worst = 0.0;
  int bad = 0;
  for (int m = 0; m < 10; ++m) {
    const int dim = 2 + m % 3;
    const RandomProblem rp = compliant_problem(rng, dim);
    const double eps = m % 2 == 0 ? 0.1 : 0.01;

    const Eigen::MatrixXd l = rp.op.to_dense();
    const oracle::Eig e = oracle::jacobi(l);
    // P+ from the oracle's own eigenvectors.
    std::vector<std::vector<double>> pplus(dim, std::vector<double>(dim, 0.0));
    for (int k = 0; k < dim; ++k) {
      if (e.values[k] < -1e-8) continue;
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) pplus[i][j] += e.vectors[k][i] * e.vectors[k][j];
    }
    const ScalarProfile& f = *rp.n.profile();
    const oracle::Field F = [&](const std::vector<double>& x) {
      std::vector<double> r(dim);
      for (int i = 0; i < dim; ++i) {
        double s = f.f(i, x[i]) - rp.h[i];
        for (int j = 0; j < dim; ++j) s += (l(i, j) + eps * pplus[i][j]) * x[j];
        r[i] = s;
      }
      return r;
    };
    const auto roots = oracle::newton_roots(F, dim, 10000, 10.0, 4000 + m, 1e-12, 1e-6);
    PerturbedOptions po;
    po.tol = 1e-14;
    const PerturbedSolveResult r = solve_perturbed(rp.view(), eps, po);
    double d = kInf;
    if (roots.size() == 1) {
      d = 0.0;
      for (int i = 0; i < dim; ++i) d = std::max(d, std::abs(roots[0][i] - r.u[i]));
    }
    worst = std::max(worst, d);
    if (roots.size() != 1 || !r.converged || d > 1e-9) ++bad;
  }
  o.pass = bad == 0;
  o.detail = "10 instances, 10^4 restarts each, max deviation " + fmt(worst) + ", mismatches " + std::to_string(bad);
  return o;
}

// 5. Radial recession limits, monotonicity and homogeneity.
Outcome recession_suite() {
  Outcome o;
  std::vector<std::string> notes;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) {
      o.pass = false;
      notes.push_back(what);
    }
  };
  const auto lin = NonlinearMap::scaled_identity(2, 0.1);
  check(radial_recession(lin, Eigen::Vector2d(0.6, 0.8)).infinite, "linear ray not infinite");
  const auto th = superposition(profiles::tanh(1.0), Eigen::VectorXd::Ones(3));
  const double l1 = radial_recession(th, Eigen::Vector3d(1, 0, 0)).radial_upper_bound;
  check(std::abs(l1 - 1.0) <= 1e-6, "tanh limit");

  ScalarProfile soft;
  soft.name = "t/(1+|t|)";
  soft.f = [](std::ptrdiff_t, double t) { return t / (1.0 + std::abs(t)); };
  soft.df = [](std::ptrdiff_t, double t) { return 1.0 / ((1.0 + std::abs(t)) * (1.0 + std::abs(t))); };
  soft.b = 1.0;
  soft.alpha = 1.0;
  const auto ss = superposition(soft, Eigen::VectorXd::Ones(2));
  const double l2 = radial_recession(ss, Eigen::Vector2d(1, 1) / std::sqrt(2.0)).radial_upper_bound;
  check(std::abs(l2 - std::sqrt(2.0)) <= 1e-6, "soft sign limit");

  // Nondecrease along every tested direction for every profile-built map.
  const std::vector<ScalarProfile> family{profiles::linear(0.5), profiles::tanh(1.0), profiles::tanh(3.0),
                                          profiles::saturating(0.2, 0.45), profiles::saturating(1.2, 0.4),
                                          profiles::piecewise_table({-2, -1, 0, 1, 3}, {-1, -0.8, 0, 0.5, 0.6}),
                                          soft};
  Rng rng(505);
  int violations = 0, rays = 0;
  for (const ScalarProfile& p : family) {
    const auto n = superposition(p, Eigen::VectorXd::Ones(5));
    for (int r = 0; r < 40; ++r) {
      Eigen::VectorXd u = rng.normal_vector(5);
      u /= n.norm(u);
      ++rays;
      try {
        const RadialResult res = radial_recession(n, u);
        for (std::size_t i = 1; i < res.r.size(); ++i)
          if (res.r[i] < res.r[i - 1] - 1e-10 * std::max(1.0, std::abs(res.r[i - 1]))) ++violations;
      } catch (const ContractError&) {
        ++violations;
      }
    }
  }
  check(violations == 0, std::to_string(violations) + " monotone violations");

  double hom = 0.0;
  RadialOptions free;
  free.require_unit = false;
  for (const NonlinearMap* n : {&th, &ss}) {
    Eigen::VectorXd u = Eigen::VectorXd::Ones(n->dim());
    u[0] = -2.0;
    u /= n->norm(u);
    const double j1 = radial_recession(*n, u).radial_upper_bound;
    for (double lambda : {0.25, 0.5, 2.0, 7.0})
      hom = std::max(hom, std::abs(radial_recession(*n, lambda * u, free).radial_upper_bound - lambda * j1));
  }
  check(hom <= 1e-6, "homogeneity");
  o.detail = "limits |tanh-1| " + fmt(std::abs(l1 - 1.0)) + ", |soft-sqrt2| " + fmt(std::abs(l2 - std::sqrt(2.0))) +
             "; " + std::to_string(rays) + " rays, " + std::to_string(violations) +
             " monotone violations; homogeneity error " + fmt(hom);
  for (const auto& s : notes) o.detail += "; " + s;
  return o;
}

// 6. Blowup of the bounded-tanh counterexample.
Outcome blowup_suite() {
  const auto op = SelfAdjointOperator::diagonal(Eigen::Vector3d(-2, 0, 2));
  const SpectralSplit split = decompose(op);
  const auto n = superposition(profiles::tanh(1.0), Eigen::VectorXd::Ones(3));
  const Eigen::VectorXd h = Eigen::Vector3d(0, 5, 0);
  const Problem p{op, split, n, h};
  const HypothesisReport rep = check_hypotheses(split, n, h);
  const ContinuationTrace t = solve_resonant(p, {}, rep);
  Outcome o;
  double lo = kInf, hi = 0.0;
  for (const auto& r : t.records) {
    if (r.epsilon > 1e-2) continue;
    const double ratio = r.norm_u / ((h[1] - 1.0) / r.epsilon);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  const bool growth = hi > 0.0 && lo >= 1.0 / 1.5 && hi <= 1.5;
  const bool slack = t.slack_divergence_k >= 0 && !t.records.back().monitor_step1_ok;
  o.pass = t.status == ContinuationStatus::norm_blowup && growth && slack && !rep.overall;
  o.detail = std::string("status ") + to_string(t.status) + ", ||u_k|| eps/(h2-1) in [" + fmt(lo) + ", " +
             fmt(hi) + "], slack diverges from k=" + std::to_string(t.slack_divergence_k) +
             ", sign condition " + to_string(rep.sign.sign_condition);
  return o;
}

SchrodingerProblem schrodinger_case() {
  SchrodingerProblem p;
  p.grid.dimension = 1;
  p.grid.n = 199;
  p.grid.half_width = std::numbers::pi / 2;
  p.grid.center = {std::numbers::pi / 2, 0.0};
  p.gap_index = 2;
  p.profile = profiles::saturating(0.2, 0.45);
  p.rhs = RhsSpec::sin_k(1);
  return p;
}

CaseOptions schrodinger_options() {
  CaseOptions c;
  c.hypothesis.seed = 7;
  c.decompose.seed = 8;
  return c;
}

// 7. Schrodinger end-to-end.
Outcome schrodinger_suite() {
  const auto t0 = Clock::now();
  const SchrodingerProblem p = schrodinger_case();
  const CaseResult r = run_case(p, schrodinger_options());
  const double secs = seconds_since(t0);
  const Eigen::VectorXd e = fd_laplacian_eigenvalues(p.grid.n, p.grid.length());
  const double d_err = std::abs(r.delta - (e[1] - e[0]));
  const double g_err = std::abs(r.gamma - (e[1] - e[0]));
  const double res = r.trace.records.empty() ? kInf : r.trace.records.back().unperturbed_residual;
  const double bound = 1e-8 * r.h.norm();
  Outcome o;
  o.pass = r.trace.status == ContinuationStatus::converged && res <= bound && secs < 10.0 && d_err <= 1e-12 &&
           g_err <= 1e-12 && r.report.overall && r.report.proof_grade;
  o.detail = std::string(to_string(r.trace.status)) + ", residual " + fmt(res) + " <= " + fmt(bound) +
             ", |delta err| " + fmt(d_err) + ", |gamma err| " + fmt(g_err) + ", hypotheses " +
             (r.report.proof_grade ? "certified" : (r.report.overall ? "consistent" : "failed")) + ", " +
             fmt(secs) + " s";
  return o;
}

// 8. Determinism of the serialized outputs.
Outcome determinism_suite() {
  auto run = [] {
    const CaseResult r = run_case(schrodinger_case(), schrodinger_options());
    std::ostringstream csv;
    io::write_trace_csv(csv, r.trace);
    return std::pair{csv.str(), io::to_json(r.report).dump(2)};
  };
  const auto a = run();
  kernels::set_thread_cap(1);
  const auto b = run();
  kernels::set_thread_cap(0);
  Outcome o;
  o.pass = a.first == b.first && a.second == b.second && !a.first.empty();
  o.detail = "trace " + std::to_string(a.first.size()) + " bytes " + (a.first == b.first ? "identical" : "DIFFER") +
             ", report " + std::to_string(a.second.size()) + " bytes " + (a.second == b.second ? "identical" : "DIFFER");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"spectral split suite", spectral_suite},
      {"closed-form diagonal", diagonal_closed_form},
      {"uniqueness probe", uniqueness_suite},
      {"brute-force Newton oracle", oracle_equivalence},
      {"recession properties", recession_suite},
      {"blowup detection", blowup_suite},
      {"Schrodinger end-to-end", schrodinger_suite},
      {"determinism", determinism_suite},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
