#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "resonance/continuation.hpp"
#include "resonance/error.hpp"

using namespace resonance;

namespace {

struct Diag {
  SelfAdjointOperator op;
  SpectralSplit split;
  NonlinearMap n;
  Eigen::VectorXd h;
  Problem view() const { return {op, split, n, h}; }
};

Diag diag_problem(const Eigen::VectorXd& d, const ScalarProfile& f, const Eigen::VectorXd& h) {
  auto op = SelfAdjointOperator::diagonal(d);
  auto split = decompose(op);
  return {std::move(op), std::move(split), superposition(f, Eigen::VectorXd::Ones(d.size())), h};
}

}  // namespace

TEST_CASE("linear diagonal problem converges to the resonant solution") {
  const Diag p = diag_problem(Eigen::Vector3d(-1, 0, 2), profiles::linear(0.5), Eigen::Vector3d(1, 1, 1));
  ContinuationOptions o;
  o.eps0 = 0.5;
  o.rho = 0.5;
  o.k_max = 60;
  const ContinuationTrace t = solve_resonant(p.view(), o);
  REQUIRE(t.status == ContinuationStatus::converged);
  REQUIRE(t.final_u);
  CHECK((*t.final_u - Eigen::Vector3d(-2, 2, 0.4)).cwiseAbs().maxCoeff() <= 1e-8);
  for (std::size_t k = 1; k < t.records.size(); ++k) {
    CHECK(t.records[k].epsilon < t.records[k - 1].epsilon);
    CHECK(t.records[k].unperturbed_residual < t.records[k - 1].unperturbed_residual);
    CHECK(t.records[k].epsilon == doctest::Approx(0.5 * std::pow(0.5, static_cast<double>(k))).epsilon(1e-15));
  }
  for (const auto& r : t.records) CHECK(r.monitor_step1_ok);
  CHECK(t.slack_divergence_k == -1);
}

TEST_CASE("monitor slack of a converged run matches the closed form") {
  const Diag p = diag_problem(Eigen::Vector3d(-1, 0, 2), profiles::linear(0.5), Eigen::Vector3d(1, 1, 1));
  ContinuationOptions o;
  o.eps0 = 0.5;
  o.rho = 0.5;
  const ContinuationTrace t = solve_resonant(p.view(), o);
  const double alpha = 2.0, ep = t.eps_prime, nh = std::sqrt(3.0);
  CHECK(ep == doctest::Approx(0.1));
  for (const auto& r : t.records) {
    const double eps = r.epsilon;
    const double u1 = 1.0 / (0.5 + eps), u2 = 1.0 / (2.5 + eps);
    const double nplus = std::hypot(u1, u2);
    const double nN = 0.5 * std::sqrt(4.0 + u1 * u1 + u2 * u2);
    const double lhs = (alpha - (1.0 + 2.0 * ep)) * nN * nN;
    const double rhs = nh * nplus - eps * nplus * nplus;
    CHECK(r.monitor.slack == doctest::Approx(lhs - rhs).epsilon(1e-9));
    CHECK(r.monitor.ratio_bound == doctest::Approx(nh));
  }
}

TEST_CASE("bounded tanh blows up like the scalar oracle") {
  const Diag p = diag_problem(Eigen::Vector3d(-1, 0, 2), profiles::tanh(1.0), Eigen::Vector3d(0, 5, 0));
  ContinuationOptions o;
  o.solver.alpha = 1.0;
  const ContinuationTrace t = solve_resonant(p.view(), o);
  CHECK(t.status == ContinuationStatus::norm_blowup);
  for (const auto& r : t.records) {
    // eps u + tanh u = 5
    const double u2 = oracle::bisect([&](double u) { return r.epsilon * u + std::tanh(u) - 5.0; });
    CHECK(r.u[1] == doctest::Approx(u2).epsilon(1e-9));
    if (r.epsilon < 1e-2) {
      const double ratio = r.norm_u / (4.0 / r.epsilon);
      CHECK(ratio > 1.0 / 1.5);
      CHECK(ratio < 1.5);
    }
  }
}

TEST_CASE("zero data converges at the first step") {
  const Diag p = diag_problem(Eigen::Vector3d(-1, 0, 2), profiles::linear(0.5), Eigen::Vector3d::Zero());
  const ContinuationTrace t = solve_resonant(p.view());
  CHECK(t.status == ContinuationStatus::converged);
  CHECK(t.records.size() == 1);
  CHECK(t.final_u->norm() == 0.0);
}

TEST_CASE("schedule validation") {
  const Diag p = diag_problem(Eigen::Vector3d(-1, 0, 2), profiles::linear(0.5), Eigen::Vector3d(1, 1, 1));
  ContinuationOptions o;
  o.rho = 1.0;
  CHECK_THROWS_AS(solve_resonant(p.view(), o), Error);
  o.rho = 0.5;
  o.eps0 = 0.0;
  CHECK_THROWS_AS(solve_resonant(p.view(), o), Error);
}

TEST_CASE("short schedule is exhausted") {
  const Diag p = diag_problem(Eigen::Vector3d(-1, 0, 2), profiles::linear(0.5), Eigen::Vector3d(1, 1, 1));
  ContinuationOptions o;
  o.k_max = 2;
  const ContinuationTrace t = solve_resonant(p.view(), o);
  CHECK(t.status == ContinuationStatus::schedule_exhausted);
  CHECK(t.records.size() == 3);
}

TEST_CASE("warm start agrees with a cold solve at the final eps") {
  const Diag p = diag_problem(Eigen::Vector4d(-3, -1, 0, 2), profiles::saturating(0.2, 0.3), Eigen::Vector4d(1, -2, 0.5, 1));
  ContinuationOptions o;
  o.k_max = 8;
  const ContinuationTrace t = solve_resonant(p.view(), o);
  const auto& last = t.records.back();
  PerturbedOptions cold;
  cold.tol = 1e-12;
  const PerturbedSolveResult r = solve_perturbed(p.view(), last.epsilon, cold);
  CHECK((r.u - last.u).norm() <= 1e-9);
}

TEST_CASE("default eps prime and slack divergence") {
  CHECK(default_eps_prime(2, 1, 1) == doctest::Approx(0.1));
  CHECK(default_eps_prime(1.2, 1, 1) == doctest::Approx(0.05));
  CHECK(default_eps_prime(1, 1, 0) == doctest::Approx(0.1));
  CHECK(default_eps_prime(0.5, 1, 1) <= 0.0);
  CHECK(slack_diverging({-1, -10, -200, -4000}));
  CHECK_FALSE(slack_diverging({-1, -10, -200}));
  CHECK_FALSE(slack_diverging({-1, -300, -200, -4000}));
  CHECK_FALSE(slack_diverging({1, 2, 3, 4, 5}));
}
