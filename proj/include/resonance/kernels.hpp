#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::parallel`; the two are
// bit-identical because reductions are carried out over fixed-size blocks whose
// partial sums are combined in index order, independent of the thread count.

#include <cstddef>
#include <functional>
#include <span>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace resonance {

enum class Exec { serial, parallel };

namespace kernels {

/// Block length for deterministic reductions.
inline constexpr std::ptrdiff_t kReduceBlock = 2048;

/// Below this length the dispatching wrappers stay serial.
inline constexpr std::ptrdiff_t kParallelThreshold = 16384;

/// Thread budget: RESONANCE_SOLVER_THREADS if set and positive, else the OpenMP default.
int thread_cap();

/// Overrides the thread budget for the process (0 restores the environment default).
void set_thread_cap(int threads);

using NodeFn = std::function<double(std::ptrdiff_t, double)>;
using IndexFn = std::function<void(std::ptrdiff_t)>;

namespace serial {
void pointwise(const NodeFn& f, std::span<const double> in, std::span<double> out);
double weighted_dot(std::span<const double> x, std::span<const double> y,
                    std::span<const double> w);
void symmetric_spmv(const Eigen::SparseMatrix<double>& a, std::span<const double> x,
                    std::span<double> y);
void for_each_index(std::ptrdiff_t n, const IndexFn& body);
}  // namespace serial

namespace parallel {
void pointwise(const NodeFn& f, std::span<const double> in, std::span<double> out);
double weighted_dot(std::span<const double> x, std::span<const double> y,
                    std::span<const double> w);
void symmetric_spmv(const Eigen::SparseMatrix<double>& a, std::span<const double> x,
                    std::span<double> y);
void for_each_index(std::ptrdiff_t n, const IndexFn& body);
}  // namespace parallel

// Dispatching wrappers: parallel when `exec == Exec::parallel`, the problem is
// at least kParallelThreshold long and more than one thread is available.
void pointwise(const NodeFn& f, std::span<const double> in, std::span<double> out,
               Exec exec = Exec::parallel);
double weighted_dot(std::span<const double> x, std::span<const double> y,
                    std::span<const double> w, Exec exec = Exec::parallel);
void symmetric_spmv(const Eigen::SparseMatrix<double>& a, std::span<const double> x,
                    std::span<double> y, Exec exec = Exec::parallel);
/// Loop whose iterations are independent and expensive (sampling, multi-start);
/// parallel whenever exec allows it, regardless of n.
void for_each_index(std::ptrdiff_t n, const IndexFn& body, Exec exec = Exec::parallel);

/// Dot product evaluated in doubled working precision (Ogita-Rump-Oishi Dot2).
double compensated_dot(std::span<const double> x, std::span<const double> y);

inline std::span<const double> view(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
inline std::span<double> view(Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace kernels
}  // namespace resonance
