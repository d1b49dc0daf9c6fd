#include "partial_eigen.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseCholesky>

#include "resonance/error.hpp"
#include "resonance/rng.hpp"

namespace resonance::detail {

namespace {

using Sparse = Eigen::SparseMatrix<double>;

Sparse shifted_identity(const Sparse& a, double sigma) {
  Sparse id(a.rows(), a.cols());
  id.setIdentity();
  Sparse s = a - sigma * id;
  s.makeCompressed();
  return s;
}

// Number of eigenvalues strictly below tau, from the signs of D in L D L^T.
Eigen::Index count_below(const Sparse& a, double tau) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::SimplicialLDLT<Sparse> ldlt(shifted_identity(a, tau));
    if (ldlt.info() == Eigen::Success) {
      const Eigen::VectorXd d = ldlt.vectorD();
      if (d.allFinite() && (d.array() != 0.0).all()) return (d.array() < 0.0).count();
    }
    // Exact singularity at tau; nudge upward.
    tau += 1e-12 * std::max(1.0, std::abs(tau));
  }
  throw EigenSolverError("inertia count failed: LDL^T breakdown", kInf);
}

// Appends the columns of y that stay independent after two passes of block
// Gram-Schmidt against v. Returns the number appended.
Eigen::Index append_orthonormal(Eigen::MatrixXd& v, Eigen::Index used, Eigen::MatrixXd y) {
  for (int pass = 0; pass < 2; ++pass)
    if (used > 0) y -= v.leftCols(used) * (v.leftCols(used).transpose() * y);
  Eigen::Index added = 0;
  for (Eigen::Index j = 0; j < y.cols() && used + added < v.cols(); ++j) {
    Eigen::VectorXd c = y.col(j);
    const double before = c.norm();
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::Index k = used + added;
      if (k > 0) c -= v.leftCols(k) * (v.leftCols(k).transpose() * c);
    }
    const double after = c.norm();
    if (!(after > 1e-10 * std::max(before, 1e-300))) continue;
    v.col(used + added) = c / after;
    ++added;
  }
  return added;
}

struct RitzResult {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  Eigen::VectorXd residuals;
};

RitzResult rayleigh_ritz(const Eigen::MatrixXd& v, const Eigen::MatrixXd& lv, Eigen::Index k,
                         Eigen::Index want) {
  Eigen::MatrixXd h = v.leftCols(k).transpose() * lv.leftCols(k);
  h = 0.5 * (h + h.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) throw EigenSolverError("Rayleigh-Ritz step failed", kInf);
  const Eigen::Index m = std::min(want, k);
  RitzResult r;
  r.values = es.eigenvalues().head(m);
  const Eigen::MatrixXd s = es.eigenvectors().leftCols(m);
  r.vectors = v.leftCols(k) * s;
  const Eigen::MatrixXd ls = lv.leftCols(k) * s;
  r.residuals.resize(m);
  for (Eigen::Index i = 0; i < m; ++i)
    r.residuals[i] = (ls.col(i) - r.values[i] * r.vectors.col(i)).norm();
  return r;
}

RitzResult block_krylov_lowest(const Sparse& a, Eigen::Index pairs, double residual_tol,
                               double lower, double spread, std::uint64_t seed) {
  const Eigen::Index n = a.rows();
  const double sigma = lower - std::max(1.0, 1e-3 * spread);
  Eigen::SimplicialLDLT<Sparse> inv(shifted_identity(a, sigma));
  if (inv.info() != Eigen::Success)
    throw EigenSolverError("shift-invert factorization failed", kInf);

  const Eigen::Index block = std::clamp<Eigen::Index>(pairs / 8, 8, 32);
  const Eigen::Index keep = std::min(n, pairs + block);
  const Eigen::Index cap = std::min(n, 3 * pairs + 4 * block);
  Eigen::MatrixXd v(n, cap), lv(n, cap);
  Eigen::Index used = 0;

  Rng rng(seed);
  Eigen::MatrixXd y(n, block);
  for (Eigen::Index j = 0; j < block; ++j) y.col(j) = rng.normal_vector(n);

  RitzResult best;
  constexpr int kMaxOuter = 400;
  for (int it = 0; it < kMaxOuter; ++it) {
    const Eigen::Index start = used;
    used += append_orthonormal(v, used, y);
    for (Eigen::Index j = start; j < used; ++j) lv.col(j) = a * v.col(j);
    const bool full = used == n || used + block > cap || used == start;

    if (used >= keep || full) {
      best = rayleigh_ritz(v, lv, used, pairs);
      const bool done = best.values.size() == pairs &&
                        (best.residuals.array() <= residual_tol).all();
      if (done || used == n) return best;
      if (full) {
        // Thick restart on the lowest `keep` Ritz vectors.
        RitzResult kept = rayleigh_ritz(v, lv, used, keep);
        const Eigen::Index k = kept.vectors.cols();
        v.leftCols(k) = kept.vectors;
        for (Eigen::Index j = 0; j < k; ++j) lv.col(j) = a * v.col(j);
        used = k;
        Eigen::Index first_bad = 0;
        while (first_bad < best.residuals.size() && best.residuals[first_bad] <= residual_tol)
          ++first_bad;
        const Eigen::Index nb = std::min(block, k - first_bad);
        y = inv.solve(Eigen::MatrixXd(kept.vectors.middleCols(first_bad, std::max<Eigen::Index>(nb, 1))));
        continue;
      }
    }
    y = inv.solve(Eigen::MatrixXd(v.middleCols(start, used - start)));
  }
  throw EigenSolverError("partial eigensolver did not converge",
                         best.residuals.size() ? best.residuals.maxCoeff() : kInf);
}

}  // namespace

PartialEigenpairs lowest_eigenpairs(const SelfAdjointOperator& op, Eigen::Index pairs,
                                    double must_exceed, double residual_tol, std::uint64_t seed) {
  const Eigen::Index n = op.dim();
  const Sparse a = op.to_sparse();
  const auto [lo, hi] = op.gershgorin_bounds();

  auto dense_all = [&]() {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.to_dense());
    if (es.info() != Eigen::Success) throw EigenSolverError("dense eigensolver failed", kInf);
    PartialEigenpairs p;
    p.values = es.eigenvalues();
    p.vectors = es.eigenvectors();
    return p;
  };

  Eigen::Index m = std::clamp<Eigen::Index>(pairs, 1, n);
  for (int round = 0; round < 32; ++round) {
    if (3 * m >= n) return dense_all();
    RitzResult r = block_krylov_lowest(a, m, residual_tol, lo, hi - lo, seed + static_cast<std::uint64_t>(round));
    const double top = r.values[m - 1];
    if (!(top > must_exceed)) {
      m = std::min(n, 2 * m);
      continue;
    }
    const double tau = top + 10.0 * residual_tol;
    const Eigen::Index below = count_below(a, tau);
    if (below != m) {
      // Missed eigenvalues (multiplicity or clustering at the cut); widen.
      m = std::min(n, std::max(m + 1, below) + 8);
      continue;
    }
    PartialEigenpairs p;
    p.values = r.values;
    p.vectors = r.vectors;
    for (Eigen::Index j = 0; j < p.vectors.cols(); ++j) p.vectors.col(j).normalize();
    p.rest_lower_bound = tau;
    p.max_residual = r.residuals.maxCoeff();
    return p;
  }
  throw EigenSolverError("partial eigensolver could not certify the low spectrum", kInf);
}

}  // namespace resonance::detail
