#include "resonance/operator_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "partial_eigen.hpp"
#include "resonance/error.hpp"
#include "resonance/rng.hpp"

namespace resonance {

namespace {

double default_symmetry_tol(double max_abs) { return 1e-12 * std::max(1.0, max_abs); }

void require_dim(const Eigen::VectorXd& v, Eigen::Index n, const char* what) {
  if (v.size() != n)
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(n) +
                         ", got " + std::to_string(v.size()));
}

}  // namespace

// ---------------------------------------------------------------------------
// SelfAdjointOperator

SelfAdjointOperator::SelfAdjointOperator(std::variant<Dense, Sparse> storage, double tol)
    : storage_(std::move(storage)), symmetry_tol_(tol) {
  dim_ = std::visit([](const auto& m) { return m.rows(); }, storage_);
}

SelfAdjointOperator SelfAdjointOperator::from_dense(const Eigen::MatrixXd& a,
                                                    std::optional<double> symmetry_tol) {
  if (a.rows() != a.cols()) throw DimensionError("operator matrix must be square");
  if (a.rows() < 1) throw DimensionError("operator dimension must be >= 1");
  if (!a.allFinite()) throw Error("operator matrix has non-finite entries");
  const double tol = symmetry_tol.value_or(default_symmetry_tol(a.cwiseAbs().maxCoeff()));
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol)
    throw SymmetryError("operator is not symmetric: max |A - A^T| = " + std::to_string(asym) +
                        " > " + std::to_string(tol));
  Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  return SelfAdjointOperator(std::move(sym), tol);
}

SelfAdjointOperator SelfAdjointOperator::from_sparse(const Eigen::SparseMatrix<double>& a,
                                                     std::optional<double> symmetry_tol) {
  if (a.rows() != a.cols()) throw DimensionError("operator matrix must be square");
  if (a.rows() < 1) throw DimensionError("operator dimension must be >= 1");
  double max_abs = 0.0;
  for (Eigen::Index j = 0; j < a.outerSize(); ++j)
    for (Sparse::InnerIterator it(a, j); it; ++it) {
      if (!std::isfinite(it.value())) throw Error("operator matrix has non-finite entries");
      max_abs = std::max(max_abs, std::abs(it.value()));
    }
  const double tol = symmetry_tol.value_or(default_symmetry_tol(max_abs));
  Sparse at = a.transpose();
  Sparse diff = a - at;
  double asym = 0.0;
  for (Eigen::Index j = 0; j < diff.outerSize(); ++j)
    for (Sparse::InnerIterator it(diff, j); it; ++it) asym = std::max(asym, std::abs(it.value()));
  if (asym > tol)
    throw SymmetryError("operator is not symmetric: max |A - A^T| = " + std::to_string(asym) +
                        " > " + std::to_string(tol));
  Sparse sym = 0.5 * (a + at);
  sym.prune(0.0);
  sym.makeCompressed();
  return SelfAdjointOperator(std::move(sym), tol);
}

SelfAdjointOperator SelfAdjointOperator::diagonal(const Eigen::VectorXd& d) {
  return from_dense(d.asDiagonal().toDenseMatrix());
}

Eigen::VectorXd SelfAdjointOperator::apply(const Eigen::VectorXd& x, Exec exec) const {
  require_dim(x, dim_, "operator apply");
  if (const auto* d = dense_storage()) return (*d) * x;
  Eigen::VectorXd y(dim_);
  kernels::symmetric_spmv(*sparse_storage(), kernels::view(x), kernels::view(y), exec);
  return y;
}

Eigen::VectorXd SelfAdjointOperator::apply_compensated(const Eigen::VectorXd& x) const {
  require_dim(x, dim_, "operator apply");
  Eigen::VectorXd y(dim_);
  if (const auto* d = dense_storage()) {
    // Column j equals row j by symmetry and is contiguous.
    for (Eigen::Index j = 0; j < dim_; ++j)
      y[j] = kernels::compensated_dot({d->col(j).data(), static_cast<std::size_t>(dim_)},
                                      kernels::view(x));
    return y;
  }
  const auto& s = *sparse_storage();
  std::vector<double> vals, xs;
  for (Eigen::Index j = 0; j < s.outerSize(); ++j) {
    vals.clear();
    xs.clear();
    for (Sparse::InnerIterator it(s, j); it; ++it) {
      vals.push_back(it.value());
      xs.push_back(x[it.index()]);
    }
    y[j] = kernels::compensated_dot(vals, xs);
  }
  return y;
}

Eigen::MatrixXd SelfAdjointOperator::to_dense() const {
  if (const auto* d = dense_storage()) return *d;
  return Eigen::MatrixXd(*sparse_storage());
}

Eigen::SparseMatrix<double> SelfAdjointOperator::to_sparse() const {
  if (const auto* s = sparse_storage()) return *s;
  Sparse s = dense_storage()->sparseView();
  s.makeCompressed();
  return s;
}

SelfAdjointOperator SelfAdjointOperator::shifted(double sigma) const {
  if (const auto* d = dense_storage()) {
    Dense m = *d;
    m.diagonal().array() -= sigma;
    return SelfAdjointOperator(std::move(m), symmetry_tol_);
  }
  Sparse id(dim_, dim_);
  id.setIdentity();
  Sparse m = *sparse_storage() - sigma * id;
  m.makeCompressed();
  return SelfAdjointOperator(std::move(m), symmetry_tol_);
}

double SelfAdjointOperator::max_abs_entry() const {
  if (const auto* d = dense_storage()) return d->cwiseAbs().maxCoeff();
  double m = 0.0;
  const auto& s = *sparse_storage();
  for (Eigen::Index k = 0; k < s.nonZeros(); ++k) m = std::max(m, std::abs(s.valuePtr()[k]));
  return m;
}

std::pair<double, double> SelfAdjointOperator::gershgorin_bounds() const {
  Eigen::VectorXd centre = Eigen::VectorXd::Zero(dim_);
  Eigen::VectorXd radius = Eigen::VectorXd::Zero(dim_);
  if (const auto* d = dense_storage()) {
    for (Eigen::Index j = 0; j < dim_; ++j)
      for (Eigen::Index i = 0; i < dim_; ++i) {
        if (i == j)
          centre[i] = (*d)(i, j);
        else
          radius[i] += std::abs((*d)(i, j));
      }
  } else {
    const auto& s = *sparse_storage();
    for (Eigen::Index j = 0; j < s.outerSize(); ++j)
      for (Sparse::InnerIterator it(s, j); it; ++it) {
        if (it.index() == j)
          centre[j] = it.value();
        else
          radius[j] += std::abs(it.value());
      }
  }
  return {(centre - radius).minCoeff(), (centre + radius).maxCoeff()};
}

// ---------------------------------------------------------------------------
// SpectralSplit

SpectralSplit::SpectralSplit(Eigen::VectorXd values, Eigen::MatrixXd vectors, double zero_tol,
                             bool complete, double rest_lower_bound)
    : values_(std::move(values)),
      vectors_(std::move(vectors)),
      zero_tol_(zero_tol),
      complete_(complete),
      rest_lower_bound_(complete ? kInf : rest_lower_bound) {
  if (vectors_.cols() != values_.size())
    throw DimensionError("eigenvector count does not match eigenvalue count");
  if (vectors_.rows() < 1) throw DimensionError("split dimension must be >= 1");
  if (complete_ && vectors_.cols() != vectors_.rows())
    throw DimensionError("complete split needs one eigenpair per dimension");
  if (!(zero_tol_ >= 0.0)) throw Error("zero_tol must be nonnegative");
  for (Eigen::Index i = 1; i < values_.size(); ++i)
    if (values_[i] < values_[i - 1]) throw Error("eigenvalues must be ascending");

  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    const double l = values_[i];
    if (l < -zero_tol_) {
      idx_minus_.push_back(i);
    } else {
      idx_plus_.push_back(i);
      if (std::abs(l) <= zero_tol_) idx_kernel_.push_back(i);
    }
  }
  if (!complete_ && !(rest_lower_bound_ > zero_tol_))
    throw Error("partial split must account for the whole non-positive spectrum");

  basis_minus_.resize(dim(), static_cast<Eigen::Index>(idx_minus_.size()));
  minus_values_.resize(static_cast<Eigen::Index>(idx_minus_.size()));
  for (std::size_t k = 0; k < idx_minus_.size(); ++k) {
    basis_minus_.col(static_cast<Eigen::Index>(k)) = vectors_.col(idx_minus_[k]);
    minus_values_[static_cast<Eigen::Index>(k)] = values_[idx_minus_[k]];
  }
  basis_kernel_.resize(dim(), static_cast<Eigen::Index>(idx_kernel_.size()));
  for (std::size_t k = 0; k < idx_kernel_.size(); ++k)
    basis_kernel_.col(static_cast<Eigen::Index>(k)) = vectors_.col(idx_kernel_[k]);

  if (!idx_minus_.empty()) {
    delta_ = -values_[idx_minus_.back()];
    gamma_ = -values_[idx_minus_.front()];
  }
}

double SpectralSplit::gap_ratio() const noexcept {
  if (idx_minus_.empty()) return 0.0;
  return gamma_ / (delta_ * delta_);
}

double SpectralSplit::nearest_to_zero() const {
  Eigen::Index best = 0;
  values_.cwiseAbs().minCoeff(&best);
  return values_[best];
}

SpectralSplit SpectralSplit::shifted(double sigma, double zero_tol) const {
  Eigen::VectorXd v = values_.array() - sigma;
  return SpectralSplit(std::move(v), vectors_, zero_tol, complete_, rest_lower_bound_ - sigma);
}

// ---------------------------------------------------------------------------
// decompose

double default_zero_tol(double spectral_radius) {
  return 1e-9 * std::max(1.0, spectral_radius);
}

namespace {

// Rayleigh quotients in doubled precision for the non-positive eigenvalues and
// the first positive one, followed by a stable re-sort.
void refine_low_eigenvalues(const SelfAdjointOperator& op, Eigen::VectorXd& values,
                            Eigen::MatrixXd& vectors, double zero_tol) {
  const Eigen::Index m = values.size();
  Eigen::Index last = 0;
  while (last < m && values[last] <= zero_tol) ++last;
  last = std::min(m, last + 1);
  for (Eigen::Index i = 0; i < last; ++i) {
    const Eigen::VectorXd x = vectors.col(i);
    const Eigen::VectorXd lx = op.apply_compensated(x);
    const double num = kernels::compensated_dot(kernels::view(x), kernels::view(lx));
    const double den = kernels::compensated_dot(kernels::view(x), kernels::view(x));
    values[i] = num / den;
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
  if (std::is_sorted(order.begin(), order.end())) return;
  Eigen::VectorXd v2(m);
  Eigen::MatrixXd q2(vectors.rows(), m);
  for (Eigen::Index k = 0; k < m; ++k) {
    v2[k] = values[order[static_cast<std::size_t>(k)]];
    q2.col(k) = vectors.col(order[static_cast<std::size_t>(k)]);
  }
  values = std::move(v2);
  vectors = std::move(q2);
}

}  // namespace

SpectralSplit decompose(const SelfAdjointOperator& op, const DecomposeOptions& opts) {
  if (opts.zero_tol && !(*opts.zero_tol >= 0.0)) throw Error("zero_tol must be nonnegative");
  const Eigen::Index n = op.dim();
  const bool dense = opts.backend == EigenBackend::dense ||
                     (opts.backend == EigenBackend::automatic && n <= opts.dense_max_dim);

  if (dense) {
    const Eigen::MatrixXd a = op.to_dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) {
      double res = kInf;
      if (es.eigenvectors().allFinite())
        res = (a * es.eigenvectors() - es.eigenvectors() * es.eigenvalues().asDiagonal())
                  .cwiseAbs()
                  .maxCoeff();
      throw EigenSolverError("dense symmetric eigensolver did not converge", res);
    }
    Eigen::VectorXd values = es.eigenvalues();
    Eigen::MatrixXd vectors = es.eigenvectors();
    const double radius = values.cwiseAbs().maxCoeff();
    const double zt = opts.zero_tol.value_or(default_zero_tol(radius));
    if (opts.refine) refine_low_eigenvalues(op, values, vectors, zt);
    return SpectralSplit(std::move(values), std::move(vectors), zt, true);
  }

  const auto [lo, hi] = op.gershgorin_bounds();
  const double radius = std::max(std::abs(lo), std::abs(hi));
  const double zt = opts.zero_tol.value_or(default_zero_tol(radius));
  auto pe = detail::lowest_eigenpairs(op, std::min(n, std::max<Eigen::Index>(1, opts.sparse_pairs)),
                                      zt, 1e-10 * std::max(1.0, radius), opts.seed);
  if (opts.refine) refine_low_eigenvalues(op, pe.values, pe.vectors, zt);
  const bool complete = pe.values.size() == n;
  return SpectralSplit(std::move(pe.values), std::move(pe.vectors), zt, complete,
                       pe.rest_lower_bound);
}

// ---------------------------------------------------------------------------
// projections

Eigen::VectorXd project(const SpectralSplit& split, const Eigen::VectorXd& u, Subspace part) {
  require_dim(u, split.dim(), "project");
  switch (part) {
    case Subspace::minus:
      return split.basis_minus() * (split.basis_minus().transpose() * u);
    case Subspace::plus:
      return u - split.basis_minus() * (split.basis_minus().transpose() * u);
    case Subspace::kernel:
      return split.basis_kernel() * (split.basis_kernel().transpose() * u);
  }
  return u;
}

KMinusResult apply_K_minus(const SpectralSplit& split, const Eigen::VectorXd& w) {
  require_dim(w, split.dim(), "apply_K_minus");
  KMinusResult r;
  if (split.idx_minus().empty()) {
    r.u = Eigen::VectorXd::Zero(split.dim());
    r.trivial = true;
    return r;
  }
  Eigen::VectorXd c = split.basis_minus().transpose() * w;
  c.array() /= split.minus_eigenvalues().array();
  r.u = split.basis_minus() * c;
  return r;
}

// ---------------------------------------------------------------------------
// verify_split

SplitReport verify_split(const SpectralSplit& split, const SelfAdjointOperator& op, int samples,
                         std::uint64_t seed, std::optional<double> tolerance) {
  if (op.dim() != split.dim()) throw DimensionError("split and operator dimensions differ");
  const Eigen::Index n = split.dim();
  const Eigen::VectorXd& lam = split.eigenvalues();
  const Eigen::MatrixXd& q = split.eigenvectors();
  const double scale = std::max(1.0, lam.size() ? lam.cwiseAbs().maxCoeff() : 1.0);
  SplitReport rep;
  rep.tolerance = tolerance.value_or(1e-8 * scale);
  const double tol = rep.tolerance;

  for (Eigen::Index k = 0; k < split.minus_eigenvalues().size(); ++k) {
    const double l = split.minus_eigenvalues()[k];
    if (l < -split.gamma() || l > -split.delta()) rep.eigenvalue_range_ok = false;
  }

  const Eigen::MatrixXd gram = q.transpose() * q;
  rep.orthonormality_error =
      (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();

  // Plus basis: explicit eigenvectors when the split is complete, else I - P-.
  Eigen::MatrixXd q_plus(n, static_cast<Eigen::Index>(split.idx_plus().size()));
  for (std::size_t k = 0; k < split.idx_plus().size(); ++k)
    q_plus.col(static_cast<Eigen::Index>(k)) = q.col(split.idx_plus()[k]);
  const Eigen::MatrixXd& q_minus = split.basis_minus();
  const Eigen::MatrixXd& q_kernel = split.basis_kernel();

  auto p_minus = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return q_minus * (q_minus.transpose() * x);
  };
  auto p_plus = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (split.complete()) return q_plus * (q_plus.transpose() * x);
    return x - p_minus(x);
  };
  auto p_kernel = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return q_kernel * (q_kernel.transpose() * x);
  };

  constexpr Eigen::Index kDenseCheckMax = 400;
  if (n <= kDenseCheckMax) {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd pm = q_minus * q_minus.transpose();
    const Eigen::MatrixXd pp = split.complete() ? Eigen::MatrixXd(q_plus * q_plus.transpose())
                                                : Eigen::MatrixXd(id - pm);
    const Eigen::MatrixXd pk = q_kernel * q_kernel.transpose();
    const Eigen::MatrixXd a = op.to_dense();
    rep.projector_sum_error = (pm + pp - id).norm();
    rep.projector_product_error = (pm * pp).norm();
    rep.commutation_error = std::max({(a * pm - pm * a).norm(), (a * pp - pp * a).norm(),
                                      (a * pk - pk * a).norm()}) /
                            scale;
    if (split.complete())
      rep.reconstruction_error = (a - q * lam.asDiagonal() * q.transpose()).norm() / scale;
    else
      rep.reconstruction_error = (a * q - q * lam.asDiagonal()).norm() / scale;
  } else {
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (int s = 0; s < 8; ++s) {
      Eigen::VectorXd x = rng.normal_vector(n);
      x.normalize();
      const Eigen::VectorXd lx = op.apply(x);
      rep.projector_sum_error =
          std::max(rep.projector_sum_error, (p_minus(x) + p_plus(x) - x).norm());
      rep.projector_product_error =
          std::max(rep.projector_product_error, p_minus(p_plus(x)).norm());
      rep.commutation_error = std::max(
          {rep.commutation_error, (op.apply(p_minus(x)) - p_minus(lx)).norm() / scale,
           (op.apply(p_plus(x)) - p_plus(lx)).norm() / scale,
           (op.apply(p_kernel(x)) - p_kernel(lx)).norm() / scale});
    }
    for (Eigen::Index i = 0; i < q.cols(); ++i)
      rep.reconstruction_error =
          std::max(rep.reconstruction_error, (op.apply(q.col(i)) - lam[i] * q.col(i)).norm() / scale);
  }

  // Random samples in H- and H+; drawn serially, evaluated concurrently.
  Rng rng(seed);
  std::vector<Eigen::VectorXd> minus_samples, plus_samples;
  for (int s = 0; s < samples; ++s) {
    if (q_minus.cols() > 0) {
      Eigen::VectorXd c = rng.normal_vector(q_minus.cols());
      minus_samples.push_back((q_minus * c).normalized());
    }
    Eigen::VectorXd x = p_plus(rng.normal_vector(n));
    if (x.norm() > 0.0) plus_samples.push_back(x.normalized());
  }
  const double ratio = split.gap_ratio();
  std::vector<double> minus_margin(minus_samples.size()), plus_form(plus_samples.size());
  kernels::for_each_index(static_cast<std::ptrdiff_t>(minus_samples.size()), [&](std::ptrdiff_t i) {
    const auto& u = minus_samples[static_cast<std::size_t>(i)];
    const Eigen::VectorXd lu = op.apply(u, Exec::serial);
    minus_margin[static_cast<std::size_t>(i)] = lu.dot(u) + ratio * lu.squaredNorm();
  });
  kernels::for_each_index(static_cast<std::ptrdiff_t>(plus_samples.size()), [&](std::ptrdiff_t i) {
    const auto& u = plus_samples[static_cast<std::size_t>(i)];
    plus_form[static_cast<std::size_t>(i)] = op.apply(u, Exec::serial).dot(u);
  });
  rep.quadratic_estimate_worst =
      minus_margin.empty() ? 0.0 : *std::min_element(minus_margin.begin(), minus_margin.end());
  rep.plus_form_worst =
      plus_form.empty() ? 0.0 : *std::min_element(plus_form.begin(), plus_form.end());

  rep.projectors_ok = rep.projector_sum_error <= tol && rep.projector_product_error <= tol;
  rep.commutation_ok = rep.commutation_error <= tol;
  rep.orthonormal_ok = rep.orthonormality_error <= tol;
  rep.reconstruction_ok = rep.reconstruction_error <= tol;
  rep.quadratic_estimate_ok = rep.quadratic_estimate_worst >= -tol;
  rep.plus_nonnegative_ok = rep.plus_form_worst >= -tol;
  return rep;
}

}  // namespace resonance
