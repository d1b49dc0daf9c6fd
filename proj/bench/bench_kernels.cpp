// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include <Eigen/SparseCore>

#include "resonance/kernels.hpp"
#include "resonance/nonlinearity.hpp"
#include "resonance/rng.hpp"

using namespace resonance;
namespace k = resonance::kernels;

namespace {

Eigen::SparseMatrix<double> laplacian_2d(int n) {
  std::vector<Eigen::Triplet<double>> t;
  auto id = [n](int i, int j) { return i + n * j; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      t.emplace_back(id(i, j), id(i, j), 4.0);
      if (i + 1 < n) {
        t.emplace_back(id(i, j), id(i + 1, j), -1.0);
        t.emplace_back(id(i + 1, j), id(i, j), -1.0);
      }
      if (j + 1 < n) {
        t.emplace_back(id(i, j), id(i, j + 1), -1.0);
        t.emplace_back(id(i, j + 1), id(i, j), -1.0);
      }
    }
  Eigen::SparseMatrix<double> a(n * n, n * n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

template <bool Parallel>
void BM_WeightedDot(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Rng rng(1);
  const Eigen::VectorXd x = rng.normal_vector(n), y = rng.normal_vector(n), w = rng.uniform_vector(n, 0.5, 1.5);
  for (auto _ : state) {
    const double s = Parallel ? k::parallel::weighted_dot(k::view(x), k::view(y), k::view(w))
                              : k::serial::weighted_dot(k::view(x), k::view(y), k::view(w));
    benchmark::DoNotOptimize(s);
  }
  state.SetBytesProcessed(state.iterations() * n * 3 * static_cast<int64_t>(sizeof(double)));
}

template <bool Parallel>
void BM_Pointwise(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Rng rng(2);
  const Eigen::VectorXd x = rng.normal_vector(n);
  Eigen::VectorXd out(n);
  const ScalarProfile p = profiles::saturating(0.2, 0.45);
  for (auto _ : state) {
    if (Parallel) k::parallel::pointwise(p.f, k::view(x), k::view(out));
    else k::serial::pointwise(p.f, k::view(x), k::view(out));
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

template <bool Parallel>
void BM_Spmv(benchmark::State& state) {
  const auto a = laplacian_2d(static_cast<int>(state.range(0)));
  Rng rng(3);
  const Eigen::VectorXd x = rng.normal_vector(a.rows());
  Eigen::VectorXd y(a.rows());
  for (auto _ : state) {
    if (Parallel) k::parallel::symmetric_spmv(a, k::view(x), k::view(y));
    else k::serial::symmetric_spmv(a, k::view(x), k::view(y));
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * a.nonZeros());
}

template <bool Parallel>
void BM_Cocoercivity(benchmark::State& state) {
  const auto dim = static_cast<Eigen::Index>(state.range(0));
  const auto n = superposition(profiles::tanh(1.0), Eigen::VectorXd::Ones(dim));
  const auto pairs = sample_pairs(dim, 500, 3.0, 7);
  for (auto _ : state) {
    const double a = estimate_cocoercivity(n, pairs, Parallel ? Exec::parallel : Exec::serial);
    benchmark::DoNotOptimize(a);
  }
}

}  // namespace

BENCHMARK(BM_WeightedDot<false>)->Name("weighted_dot/serial")->Range(1 << 12, 1 << 22);
BENCHMARK(BM_WeightedDot<true>)->Name("weighted_dot/parallel")->Range(1 << 12, 1 << 22);
BENCHMARK(BM_Pointwise<false>)->Name("pointwise/serial")->Range(1 << 12, 1 << 20);
BENCHMARK(BM_Pointwise<true>)->Name("pointwise/parallel")->Range(1 << 12, 1 << 20);
BENCHMARK(BM_Spmv<false>)->Name("spmv_2d/serial")->Arg(128)->Arg(512)->Arg(1024);
BENCHMARK(BM_Spmv<true>)->Name("spmv_2d/parallel")->Arg(128)->Arg(512)->Arg(1024);
BENCHMARK(BM_Cocoercivity<false>)->Name("cocoercivity/serial")->Arg(64)->Arg(4096);
BENCHMARK(BM_Cocoercivity<true>)->Name("cocoercivity/parallel")->Arg(64)->Arg(4096);

BENCHMARK_MAIN();
