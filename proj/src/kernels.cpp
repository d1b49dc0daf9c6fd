#include "resonance/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <vector>

#include <omp.h>

#include "resonance/error.hpp"

namespace resonance::kernels {

namespace {

std::atomic<int> g_thread_override{0};

int env_thread_cap() {
  static const int cap = [] {
    if (const char* s = std::getenv("RESONANCE_SOLVER_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(s, &end, 10);
      if (end != s && v > 0) return static_cast<int>(v);
    }
    return omp_get_max_threads();
  }();
  return cap;
}

void check_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw DimensionError("kernel operands differ in length");
}

double block_dot(const double* x, const double* y, const double* w, std::ptrdiff_t lo,
                 std::ptrdiff_t hi) {
  double s = 0.0;
  if (w != nullptr) {
    for (std::ptrdiff_t i = lo; i < hi; ++i) s += w[i] * x[i] * y[i];
  } else {
    for (std::ptrdiff_t i = lo; i < hi; ++i) s += x[i] * y[i];
  }
  return s;
}

const double* weights_or_null(std::span<const double> w, std::size_t n) {
  if (w.empty()) return nullptr;
  check_same_size(w.size(), n);
  return w.data();
}

// Rethrows the first exception captured inside an OpenMP region.
class ExceptionSlot {
 public:
  void capture() {
    std::lock_guard lock(mutex_);
    if (!ptr_) ptr_ = std::current_exception();
  }
  void rethrow() const {
    if (ptr_) std::rethrow_exception(ptr_);
  }

 private:
  std::mutex mutex_;
  std::exception_ptr ptr_;
};

bool go_parallel(Exec exec, std::ptrdiff_t n) {
  return exec == Exec::parallel && n >= kParallelThreshold && thread_cap() > 1;
}

}  // namespace

int thread_cap() {
  const int o = g_thread_override.load();
  return o > 0 ? o : env_thread_cap();
}

void set_thread_cap(int threads) { g_thread_override.store(threads > 0 ? threads : 0); }

// ---------------------------------------------------------------------------
// serial reference

void serial::pointwise(const NodeFn& f, std::span<const double> in, std::span<double> out) {
  check_same_size(in.size(), out.size());
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = f(i, in[i]);
}

double serial::weighted_dot(std::span<const double> x, std::span<const double> y,
                            std::span<const double> w) {
  check_same_size(x.size(), y.size());
  const double* wp = weights_or_null(w, x.size());
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  double total = 0.0;
  for (std::ptrdiff_t lo = 0; lo < n; lo += kReduceBlock)
    total += block_dot(x.data(), y.data(), wp, lo, std::min(n, lo + kReduceBlock));
  return total;
}

void serial::symmetric_spmv(const Eigen::SparseMatrix<double>& a, std::span<const double> x,
                            std::span<double> y) {
  check_same_size(static_cast<std::size_t>(a.cols()), x.size());
  check_same_size(static_cast<std::size_t>(a.rows()), y.size());
  for (Eigen::Index j = 0; j < a.outerSize(); ++j) {
    double s = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, j); it; ++it)
      s += it.value() * x[static_cast<std::size_t>(it.index())];
    y[static_cast<std::size_t>(j)] = s;
  }
}

void serial::for_each_index(std::ptrdiff_t n, const IndexFn& body) {
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
}

// ---------------------------------------------------------------------------
// OpenMP

void parallel::pointwise(const NodeFn& f, std::span<const double> in, std::span<double> out) {
  check_same_size(in.size(), out.size());
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  ExceptionSlot slot;
#pragma omp parallel for schedule(static) num_threads(thread_cap())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = f(i, in[i]);
    } catch (...) {
      slot.capture();
    }
  }
  slot.rethrow();
}

double parallel::weighted_dot(std::span<const double> x, std::span<const double> y,
                              std::span<const double> w) {
  check_same_size(x.size(), y.size());
  const double* wp = weights_or_null(w, x.size());
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);
#pragma omp parallel for schedule(static) num_threads(thread_cap())
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::ptrdiff_t lo = b * kReduceBlock;
    partial[static_cast<std::size_t>(b)] =
        block_dot(x.data(), y.data(), wp, lo, std::min(n, lo + kReduceBlock));
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

void parallel::symmetric_spmv(const Eigen::SparseMatrix<double>& a, std::span<const double> x,
                              std::span<double> y) {
  check_same_size(static_cast<std::size_t>(a.cols()), x.size());
  check_same_size(static_cast<std::size_t>(a.rows()), y.size());
  const Eigen::Index cols = a.outerSize();
#pragma omp parallel for schedule(static) num_threads(thread_cap())
  for (Eigen::Index j = 0; j < cols; ++j) {
    double s = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, j); it; ++it)
      s += it.value() * x[static_cast<std::size_t>(it.index())];
    y[static_cast<std::size_t>(j)] = s;
  }
}

void parallel::for_each_index(std::ptrdiff_t n, const IndexFn& body) {
  ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_cap())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      slot.capture();
    }
  }
  slot.rethrow();
}

// ---------------------------------------------------------------------------
// dispatch

void pointwise(const NodeFn& f, std::span<const double> in, std::span<double> out, Exec exec) {
  if (go_parallel(exec, static_cast<std::ptrdiff_t>(in.size())))
    parallel::pointwise(f, in, out);
  else
    serial::pointwise(f, in, out);
}

double weighted_dot(std::span<const double> x, std::span<const double> y,
                    std::span<const double> w, Exec exec) {
  if (go_parallel(exec, static_cast<std::ptrdiff_t>(x.size())))
    return parallel::weighted_dot(x, y, w);
  return serial::weighted_dot(x, y, w);
}

void symmetric_spmv(const Eigen::SparseMatrix<double>& a, std::span<const double> x,
                    std::span<double> y, Exec exec) {
  if (go_parallel(exec, static_cast<std::ptrdiff_t>(a.nonZeros())))
    parallel::symmetric_spmv(a, x, y);
  else
    serial::symmetric_spmv(a, x, y);
}

void for_each_index(std::ptrdiff_t n, const IndexFn& body, Exec exec) {
  if (exec == Exec::parallel && n > 1 && thread_cap() > 1 && !omp_in_parallel())
    parallel::for_each_index(n, body);
  else
    serial::for_each_index(n, body);
}

double compensated_dot(std::span<const double> x, std::span<const double> y) {
  check_same_size(x.size(), y.size());
  double s = 0.0;
  double c = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = x[i] * y[i];
    const double ep = std::fma(x[i], y[i], -p);
    const double t = s + p;
    const double z = t - s;
    const double es = (s - (t - z)) + (p - z);
    s = t;
    c += es + ep;
  }
  return s + c;
}

}  // namespace resonance::kernels
