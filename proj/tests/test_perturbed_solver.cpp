#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "resonance/error.hpp"
#include "resonance/perturbed_solver.hpp"
#include "resonance/rng.hpp"

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

TEST_CASE("residual of the perturbed equation") {
  const Diag p = diag_problem(Eigen::Vector3d(-1, 0, 2), profiles::linear(0.5), Eigen::Vector3d(1, 1, 1));
  const Eigen::VectorXd r0 = residual(p.view(), 0.1, Eigen::Vector3d::Zero());
  CHECK((r0 + Eigen::Vector3d(1, 1, 1)).norm() == 0.0);
  const Eigen::VectorXd r1 = residual(p.view(), 0.1, Eigen::Vector3d(-2, 5.0 / 3.0, 5.0 / 13.0));
  CHECK(r1.cwiseAbs().maxCoeff() <= 1e-15);
  const Diag z = diag_problem(Eigen::Vector3d(-1, 0, 2), profiles::linear(0.5), Eigen::Vector3d::Zero());
  CHECK(residual(z.view(), 0.0, Eigen::Vector3d::Zero()).norm() == 0.0);
}

TEST_CASE("closed-form diagonal solution for both backends") {
  const Diag p = diag_problem(Eigen::Vector3d(-1, 0, 2), profiles::linear(0.5), Eigen::Vector3d(1, 1, 1));
  for (SolverBackend b : {SolverBackend::newton, SolverBackend::picard}) {
    PerturbedOptions o;
    o.backend = b;
    o.tol = 1e-13;
    const PerturbedSolveResult r = solve_perturbed(p.view(), 0.1, o);
    CHECK(r.converged);
    CHECK(r.u[0] == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(r.u[1] == doctest::Approx(1.0 / 0.6).epsilon(1e-12));
    CHECK(r.u[2] == doctest::Approx(1.0 / 2.6).epsilon(1e-12));
    CHECK(r.monotone_regime);
    CHECK(r.strong_monotonicity_C == doctest::Approx(1.0));  // min(10, 2 - 1)
    CHECK(residual(p.view(), 0.1, r.u).norm() <= r.target);
  }
}

TEST_CASE("half tanh matches per-component bisection") {
  const Eigen::Vector3d lambda(-1, 0, 2);
  ScalarProfile f = profiles::tanh(0.5);
  const Diag p = diag_problem(lambda, f, Eigen::Vector3d::Constant(0.1));
  const double eps = 0.05;
  PerturbedOptions o;
  o.tol = 1e-14;
  const PerturbedSolveResult r = solve_perturbed(p.view(), eps, o);
  REQUIRE(r.converged);
  for (int i = 0; i < 3; ++i) {
    const double coef = lambda[i] + (lambda[i] >= 0 ? eps : 0.0);
    const double sgn = lambda[i] < 0 ? -1.0 : 1.0;  // orient the equation to be increasing
    const double root = oracle::bisect([&](double u) { return sgn * (coef * u + 0.5 * std::tanh(u) - 0.1); });
    CHECK(std::abs(r.u[i] - root) <= 1e-12);
  }
}

TEST_CASE("zero data gives the zero solution") {
  const Diag p = diag_problem(Eigen::Vector4d(-3, -1, 0, 2), profiles::saturating(0.2, 0.45), Eigen::Vector4d::Zero());
  PerturbedOptions o;
  o.start = Eigen::Vector4d(3, -2, 1, 5);
  const PerturbedSolveResult r = solve_perturbed(p.view(), 0.3, o);
  CHECK(r.converged);
  CHECK(r.u.norm() <= 1e-10);
}

TEST_CASE("eps must be positive") {
  const Diag p = diag_problem(Eigen::Vector3d(-1, 0, 2), profiles::linear(0.5), Eigen::Vector3d(1, 1, 1));
  CHECK_THROWS_AS(solve_perturbed(p.view(), 0.0, {}), Error);
  CHECK_THROWS_AS(solve_perturbed(p.view(), -1.0, {}), Error);
}

TEST_CASE("uniqueness probe") {
  const Diag p = diag_problem(Eigen::Vector3d(-1, 0, 2), profiles::linear(0.5), Eigen::Vector3d(1, 1, 1));
  const std::vector<Eigen::VectorXd> starts{Eigen::Vector3d::Zero(), Eigen::Vector3d::Constant(10),
                                            Eigen::Vector3d::Constant(-10)};
  const UniquenessResult a = uniqueness_probe(p.view(), 0.1, starts, 1e-12);
  CHECK(a.status == UniquenessStatus::unique);
  CHECK(a.max_distance <= 1e-10);
  const UniquenessResult b = uniqueness_probe(p.view(), 1e-6, starts, 1e-12);
  CHECK(b.status == UniquenessStatus::unique);
  CHECK(b.max_distance <= 1e-8);
}

TEST_CASE("non-monotone map: probe is not unique") {
  // L = 0, N(u) = u^3 - u has three roots per component for h = 0.
  auto op = SelfAdjointOperator::diagonal(Eigen::Vector2d(1, 1));
  auto split = decompose(op);
  const NonlinearMap n(2, [](const Eigen::VectorXd& u) {
    return Eigen::VectorXd((u.array().cube() - 2.0 * u.array()).matrix());
  });
  const Eigen::VectorXd h = Eigen::VectorXd::Zero(2);
  const Problem p{op, split, n, h};
  PerturbedOptions o;
  o.alpha = 1.0;
  o.allow_fallback = false;
  const std::vector<Eigen::VectorXd> starts{Eigen::Vector2d(0.1, 0.1), Eigen::Vector2d(2, 2), Eigen::Vector2d(-2, -2)};
  const UniquenessResult r = uniqueness_probe(p, 0.5, starts, 1e-10, o);
  CHECK(r.status != UniquenessStatus::unique);
}

TEST_CASE("sparse path with the low-rank correction matches the dense path") {
  const int n = 500;
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 2.0 - 0.05);
    if (i + 1 < n) {
      t.emplace_back(i, i + 1, -1.0);
      t.emplace_back(i + 1, i, -1.0);
    }
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  const auto sparse_op = SelfAdjointOperator::from_sparse(a);
  const auto dense_op = SelfAdjointOperator::from_dense(Eigen::MatrixXd(a));
  const SpectralSplit split = decompose(dense_op);
  REQUIRE(!split.idx_minus().empty());
  const auto nmap = superposition(profiles::saturating(0.2, 0.45), Eigen::VectorXd::Ones(n));
  Rng rng(2);
  const Eigen::VectorXd h = rng.normal_vector(n);
  PerturbedOptions o;
  o.tol = 1e-12;
  const auto rs = solve_perturbed(Problem{sparse_op, split, nmap, h}, 0.2, o);
  const auto rd = solve_perturbed(Problem{dense_op, split, nmap, h}, 0.2, o);
  CHECK(rs.converged);
  CHECK(rd.converged);
  CHECK((rs.u - rd.u).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("full Jacobian from a coupled map") {
  // N(u) = M u with M symmetric positive definite, alpha = 1 / lambda_max(M).
  Eigen::Matrix3d m;
  m << 0.4, 0.1, 0.0, 0.1, 0.3, 0.05, 0.0, 0.05, 0.2;
  const NonlinearMap n(3, [m](const Eigen::VectorXd& u) { return Eigen::VectorXd(m * u); });
  auto op = SelfAdjointOperator::diagonal(Eigen::Vector3d(-1, 0, 2));
  auto split = decompose(op);
  const Eigen::Vector3d h(1, -1, 0.5);
  const PerturbedSolveResult r = solve_perturbed(Problem{op, split, n, h}, 0.1, {});
  REQUIRE(r.converged);
  Eigen::Matrix3d a = Eigen::Vector3d(-1, 0.1, 2.1).asDiagonal();
  a += m;
  std::vector<std::vector<double>> rows(3, std::vector<double>(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rows[i][j] = a(i, j);
  std::vector<double> x;
  REQUIRE(oracle::gauss(rows, oracle::to_std(h), x));
  for (int i = 0; i < 3; ++i) CHECK(std::abs(r.u[i] - x[i]) <= 1e-10);
}
