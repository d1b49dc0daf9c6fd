#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "resonance/error.hpp"
#include "resonance/nonlinearity.hpp"

using namespace resonance;

namespace {

ScalarProfile soft_sign() {
  ScalarProfile p;
  p.name = "t/(1+|t|)";
  p.f = [](std::ptrdiff_t, double t) { return t / (1.0 + std::abs(t)); };
  p.df = [](std::ptrdiff_t, double t) { return 1.0 / ((1.0 + std::abs(t)) * (1.0 + std::abs(t))); };
  p.b = 1.0;
  p.q = {};
  p.alpha = 1.0;
  return p;
}

}  // namespace

TEST_CASE("profile evaluation") {
  const auto lin = superposition(profiles::linear(0.5), Eigen::VectorXd::Ones(2));
  const Eigen::VectorXd n1 = lin(Eigen::Vector2d(2, -4));
  CHECK(n1[0] == 1.0);
  CHECK(n1[1] == -2.0);

  const auto sat = superposition(profiles::saturating(0.1, 0.2), Eigen::VectorXd::Ones(1));
  CHECK(sat(Eigen::VectorXd::Ones(1))[0] == doctest::Approx(0.15).epsilon(1e-15));

  ScalarProfile mix;
  mix.name = "tanh+0.1t";
  mix.f = [](std::ptrdiff_t, double t) { return std::tanh(t) + 0.1 * t; };
  mix.a = 0.1;
  mix.b = 1.1;
  mix.q = Eigen::VectorXd::Constant(3, 1.0);
  mix.alpha = 1.0 / 1.1;
  const auto nm = superposition(mix, Eigen::VectorXd::Ones(3));
  CHECK(nm(Eigen::VectorXd::Zero(3)).norm() == 0.0);
}

TEST_CASE("saturating constants") {
  const ScalarProfile p = profiles::saturating(0.2, 0.45);
  CHECK(p.a == doctest::Approx(0.2));
  CHECK(p.b == doctest::Approx(0.45));
  // f'(t) peaks at sqrt(3): a + (c - a) 9/8
  CHECK(1.0 / p.alpha == doctest::Approx(0.2 + 0.25 * 9.0 / 8.0));
  CHECK(check_profile(p, 10).all());
  CHECK_THROWS_AS(profiles::saturating(0.5, -0.5), ContractError);
}

TEST_CASE("superposition rejects false claims") {
  ScalarProfile p = profiles::linear(0.5);
  p.alpha = 5.0;  // true value 2
  CHECK_THROWS_AS(superposition(p, Eigen::VectorXd::Ones(4)), ContractError);
  ScalarProfile q = profiles::tanh(1.0);
  q.a = 0.5;  // tanh is bounded
  CHECK_THROWS_AS(superposition(q, Eigen::VectorXd::Ones(4)), ContractError);
  CHECK_THROWS_AS(superposition(profiles::linear(0.5), Eigen::Vector2d(1, 0)), Error);
}

TEST_CASE("N(0) must vanish") {
  auto shifted = [](const Eigen::VectorXd& u) { return Eigen::VectorXd((u.array() + 1.0).matrix()); };
  CHECK_THROWS_AS(NonlinearMap(2, shifted), ContractError);
}

TEST_CASE("cocoercivity of linear maps is exact") {
  const auto n = NonlinearMap::scaled_identity(3, 0.25);
  CHECK(estimate_cocoercivity(n, sample_pairs(3, 50, 3.0, 1)) == doctest::Approx(4.0).epsilon(1e-14));
  const NonlinearMap zero(3, [](const Eigen::VectorXd& u) { return Eigen::VectorXd::Zero(u.size()).eval(); });
  CHECK(std::isinf(estimate_cocoercivity(zero, sample_pairs(3, 20, 3.0, 1))));
}

TEST_CASE("cocoercivity of componentwise tanh") {
  const auto n = superposition(profiles::tanh(1.0), Eigen::VectorXd::Ones(2));
  const auto pairs = sample_pairs(2, 500, 3.0, 7);
  const double est = estimate_cocoercivity(n, pairs, Exec::serial);
  CHECK(est == estimate_cocoercivity(n, pairs, Exec::parallel));

  // Independent evaluation of the same ratio.
  double oracle = std::numeric_limits<double>::infinity();
  for (const auto& [u, v] : pairs) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double dn = std::tanh(u[i]) - std::tanh(v[i]);
      num += dn * (u[i] - v[i]);
      den += dn * dn;
    }
    if (den > 0.0) oracle = std::min(oracle, num / den);
  }
  CHECK(est == doctest::Approx(oracle).epsilon(1e-12));
  // tanh is 1-Lipschitz, so every ratio is at least 1.
  CHECK(est >= 1.0);

  // Over a 101 x 101 endpoint grid the minimum sits at the neighbours 0 and 0.06.
  double grid_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 101; ++i)
    for (int j = 0; j < 101; ++j) {
      if (i == j) continue;
      const double s = -3.0 + 0.06 * i, t = -3.0 + 0.06 * j;
      grid_min = std::min(grid_min, (s - t) / (std::tanh(s) - std::tanh(t)));
    }
  CHECK(grid_min == doctest::Approx(0.06 / std::tanh(0.06)).epsilon(1e-12));
  CHECK(grid_min < 1.002);
}

TEST_CASE("psi") {
  const auto half = NonlinearMap::scaled_identity(2, 0.5);
  CHECK(psi(half, Eigen::Vector2d(3, 4)) == doctest::Approx(12.5));
  CHECK(psi(half, Eigen::Vector2d::Zero()) == 0.0);
  const auto t = superposition(profiles::tanh(1.0), Eigen::VectorXd::Ones(2));
  CHECK(psi(t, Eigen::Vector2d(10, -10)) == doctest::Approx(20.0 * std::tanh(10.0)).epsilon(1e-15));
}

TEST_CASE("radial recession limits") {
  const auto lin = NonlinearMap::scaled_identity(2, 0.1);
  const RadialResult a = radial_recession(lin, Eigen::Vector2d(0.6, 0.8));
  CHECK(a.infinite);

  const auto th = superposition(profiles::tanh(1.0), Eigen::VectorXd::Ones(3));
  const RadialResult b = radial_recession(th, Eigen::Vector3d(1, 0, 0));
  CHECK_FALSE(b.infinite);
  CHECK(b.radial_upper_bound == doctest::Approx(1.0).epsilon(1e-6));

  const auto ss = superposition(soft_sign(), Eigen::VectorXd::Ones(2));
  const RadialResult c = radial_recession(ss, Eigen::Vector2d(1, 1) / std::sqrt(2.0));
  CHECK(std::abs(c.radial_upper_bound - std::sqrt(2.0)) <= 1e-6);
  for (std::size_t i = 1; i < c.r.size(); ++i) CHECK(c.r[i] >= c.r[i - 1]);
}

TEST_CASE("radial homogeneity on finite limits") {
  const auto th = superposition(profiles::tanh(1.0), Eigen::VectorXd::Ones(3));
  const Eigen::Vector3d u = Eigen::Vector3d(1, -2, 2) / 3.0;
  RadialOptions free;
  free.require_unit = false;
  const double j1 = radial_recession(th, u).radial_upper_bound;
  CHECK(j1 == doctest::Approx(5.0 / 3.0).epsilon(1e-6));
  for (double lambda : {0.5, 2.0, 7.0})
    CHECK(std::abs(radial_recession(th, lambda * u, free).radial_upper_bound - lambda * j1) <= 1e-6);
}

TEST_CASE("radial recession contracts") {
  const auto th = superposition(profiles::tanh(1.0), Eigen::VectorXd::Ones(2));
  CHECK_THROWS_AS(radial_recession(th, Eigen::Vector2d(1, 1)), Error);
  RadialOptions bad;
  bad.schedule = {1.0, 0.5};
  CHECK_THROWS_AS(radial_recession(th, Eigen::Vector2d(1, 0), bad), Error);
  const NonlinearMap neg(2, [](const Eigen::VectorXd& u) { return Eigen::VectorXd(-u); });
  CHECK_THROWS_AS(radial_recession(neg, Eigen::Vector2d(1, 0)), ContractError);
}

TEST_CASE("piecewise table") {
  const ScalarProfile p = profiles::piecewise_table({-1, 0, 1, 2}, {-0.5, 0, 0.5, 0.75});
  CHECK(p.f(0, 0.5) == doctest::Approx(0.25));
  CHECK(p.f(0, 3.0) == doctest::Approx(1.0));    // end slope 0.25
  CHECK(p.f(0, -3.0) == doctest::Approx(-1.5));  // end slope 0.5
  CHECK(p.alpha == doctest::Approx(2.0));
  CHECK(check_profile(p, 1).all());
  CHECK_THROWS_AS(profiles::piecewise_table({-1, 0, 1}, {0.5, 0, 1}), ContractError);

  const auto path = std::filesystem::temp_directory_path() / "resonance_table_test.txt";
  {
    std::ofstream out(path);
    out << "# t f\n-1 -0.5\n0 0\n1 0.5\n2 0.75\n";
  }
  const ScalarProfile q = profiles::piecewise_table_file(path);
  CHECK(q.f(0, 1.5) == doctest::Approx(0.625));
  std::filesystem::remove(path);
}

TEST_CASE("finite-difference and analytic Jacobians agree") {
  ScalarProfile p = profiles::saturating(0.2, 0.45);
  const auto n = superposition(p, Eigen::VectorXd::Ones(4));
  ScalarProfile bare = p;
  bare.df = nullptr;
  const auto m = superposition(bare, Eigen::VectorXd::Ones(4));
  const Eigen::Vector4d u(-1.5, 0.1, 0.7, 3.0);
  const Jacobian ja = n.jacobian(u), jb = m.jacobian(u);
  CHECK(ja.diagonal);
  CHECK(jb.diagonal);
  CHECK((ja.diag - jb.diag).cwiseAbs().maxCoeff() <= 1e-7);
}
