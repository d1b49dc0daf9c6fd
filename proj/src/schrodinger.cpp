#include "resonance/schrodinger.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/SparseCore>

#include "resonance/error.hpp"
#include "resonance/io.hpp"

namespace resonance {

namespace {

std::string fmt(double v) { return io::format_double(v); }

}  // namespace

Eigen::Index Grid::nodes() const {
  const Eigen::Index m = n;
  return dimension == 2 ? m * m : m;
}

std::array<int, 2> Grid::split_index(Eigen::Index node) const {
  if (dimension == 1) return {static_cast<int>(node), 0};
  return {static_cast<int>(node % n), static_cast<int>(node / n)};
}

void Grid::validate() const {
  if (dimension != 1 && dimension != 2) throw Error("grid dimension must be 1 or 2");
  if (n < 3) throw Error("grid needs n >= 3 points per axis");
  if (!(half_width > 0.0) || !std::isfinite(half_width)) throw Error("grid half_width must be positive");
  if (!std::isfinite(center[0]) || !std::isfinite(center[1])) throw Error("grid center must be finite");
}

// ---------------------------------------------------------------------------
// potentials

Potential Potential::finite_well(double depth, double width) {
  if (!(width > 0.0)) throw Error("finite_well needs width > 0");
  Potential p;
  p.kind = "finite_well";
  p.depth = depth;
  p.width = width;
  return p;
}

Potential Potential::double_well(double depth, double width, double separation) {
  if (!(width > 0.0) || !(separation >= 0.0)) throw Error("double_well needs width > 0, separation >= 0");
  Potential p;
  p.kind = "double_well";
  p.depth = depth;
  p.width = width;
  p.separation = separation;
  return p;
}

Potential Potential::cosine(double amplitude, double period) {
  if (!(period > 0.0)) throw Error("cosine potential needs period > 0");
  Potential p;
  p.kind = "cosine";
  p.amplitude = amplitude;
  p.period = period;
  return p;
}

double Potential::value(double x, double y, int dimension) const {
  const double yy = dimension == 2 ? y : 0.0;
  if (kind == "zero") return 0.0;
  if (kind == "finite_well") return std::hypot(x, yy) <= 0.5 * width ? -depth : 0.0;
  if (kind == "double_well") {
    const double s = 0.5 * separation;
    const double r = std::min(std::hypot(x - s, yy), std::hypot(x + s, yy));
    return r <= 0.5 * width ? -depth : 0.0;
  }
  if (kind == "cosine") {
    const double w = 2.0 * std::numbers::pi / period;
    double v = amplitude * std::cos(w * x);
    if (dimension == 2) v += amplitude * std::cos(w * y);
    return v;
  }
  throw Error("unknown potential '" + kind + "'");
}

std::string Potential::describe() const {
  if (kind == "finite_well") return "finite_well(" + fmt(depth) + "," + fmt(width) + ")";
  if (kind == "double_well")
    return "double_well(" + fmt(depth) + "," + fmt(width) + "," + fmt(separation) + ")";
  if (kind == "cosine") return "cosine(" + fmt(amplitude) + "," + fmt(period) + ")";
  return kind;
}

// ---------------------------------------------------------------------------
// right-hand sides

RhsSpec RhsSpec::sin_k(int k) {
  if (k < 1) throw Error("sin_k needs k >= 1");
  RhsSpec r;
  r.kind = "sin_k";
  r.k = k;
  return r;
}

RhsSpec RhsSpec::gaussian(std::array<double, 2> center, double width) {
  if (!(width > 0.0)) throw Error("gaussian needs width > 0");
  RhsSpec r;
  r.kind = "gaussian";
  r.center = center;
  r.width = width;
  return r;
}

RhsSpec RhsSpec::constant(double c) {
  RhsSpec r;
  r.kind = "constant";
  r.value = c;
  return r;
}

RhsSpec RhsSpec::from_file(std::filesystem::path path) {
  RhsSpec r;
  r.kind = "file";
  r.file = std::move(path);
  return r;
}

std::string RhsSpec::describe() const {
  if (kind == "sin_k") return "sin_k(" + std::to_string(k) + ")";
  if (kind == "gaussian")
    return "gaussian(" + fmt(center[0]) + "," + fmt(center[1]) + "," + fmt(width) + ")";
  if (kind == "constant") return "constant(" + fmt(value) + ")";
  if (kind == "file") return "file:" + file.string();
  return kind;
}

Eigen::VectorXd sample_rhs(const Grid& grid, const RhsSpec& rhs) {
  grid.validate();
  const Eigen::Index m = grid.nodes();
  if (rhs.kind == "file") {
    Eigen::VectorXd v = io::read_vector(rhs.file);
    if (v.size() != m)
      throw DimensionError("rhs file " + rhs.file.string() + " has " + std::to_string(v.size()) +
                           " values, grid has " + std::to_string(m) + " nodes");
    return v;
  }
  Eigen::VectorXd v(m);
  const double len = grid.length();
  for (Eigen::Index node = 0; node < m; ++node) {
    const auto [i, j] = grid.split_index(node);
    const double x = grid.coordinate(0, i);
    const double y = grid.dimension == 2 ? grid.coordinate(1, j) : 0.0;
    if (rhs.kind == "sin_k") {
      const double w = rhs.k * std::numbers::pi / len;
      double s = std::sin(w * (x - grid.left(0)));
      if (grid.dimension == 2) s *= std::sin(w * (y - grid.left(1)));
      v[node] = s;
    } else if (rhs.kind == "gaussian") {
      const double dx = x - rhs.center[0];
      const double dy = grid.dimension == 2 ? y - rhs.center[1] : 0.0;
      v[node] = std::exp(-(dx * dx + dy * dy) / (2.0 * rhs.width * rhs.width));
    } else if (rhs.kind == "constant") {
      v[node] = rhs.value;
    } else {
      throw Error("unknown rhs '" + rhs.kind + "'");
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// discretization

Discretization discretize(const SchrodingerProblem& problem) {
  const Grid& g = problem.grid;
  g.validate();
  if (!std::isfinite(problem.sigma0)) throw Error("sigma0 must be finite");
  const Eigen::Index m = g.nodes();
  const double h = g.spacing();
  const double ih2 = 1.0 / (h * h);
  const double diag = (g.dimension == 2 ? 4.0 : 2.0) * ih2;

  Eigen::VectorXd pot(m);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(m) * (g.dimension == 2 ? 5 : 3));
  for (Eigen::Index node = 0; node < m; ++node) {
    const auto [i, j] = g.split_index(node);
    const double x = g.coordinate(0, i) - g.center[0];
    const double y = g.dimension == 2 ? g.coordinate(1, j) - g.center[1] : 0.0;
    const double v = problem.potential.value(x, y, g.dimension);
    if (!std::isfinite(v)) throw Error("potential is not finite at node " + std::to_string(node));
    pot[node] = v;
    trips.emplace_back(node, node, diag + v - problem.sigma0);
    if (i > 0) trips.emplace_back(node, node - 1, -ih2);
    if (i + 1 < g.n) trips.emplace_back(node, node + 1, -ih2);
    if (g.dimension == 2) {
      if (j > 0) trips.emplace_back(node, node - g.n, -ih2);
      if (j + 1 < g.n) trips.emplace_back(node, node + g.n, -ih2);
    }
  }
  Eigen::SparseMatrix<double> a(m, m);
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  return Discretization{SelfAdjointOperator::from_sparse(a, 0.0),
                        Eigen::VectorXd::Constant(m, std::pow(h, g.dimension)), std::move(pot)};
}

Eigen::VectorXd fd_laplacian_eigenvalues(int n, double length) {
  if (n < 1 || !(length > 0.0)) throw Error("fd_laplacian_eigenvalues: invalid arguments");
  const double h = length / (n + 1);
  Eigen::VectorXd v(n);
  for (int k = 1; k <= n; ++k) {
    const double s = std::sin(k * std::numbers::pi * h / (2.0 * length));
    v[k - 1] = 4.0 / (h * h) * s * s;
  }
  return v;
}

// ---------------------------------------------------------------------------
// gap alignment

namespace {

struct Cluster {
  Eigen::Index first, last;
  double mean;
};

std::vector<Cluster> clusters_of(const Eigen::VectorXd& v, double tol) {
  std::vector<Cluster> out;
  Eigen::Index start = 0;
  for (Eigen::Index i = 1; i <= v.size(); ++i) {
    if (i == v.size() || v[i] - v[i - 1] > tol) {
      out.push_back({start, i - 1, v.segment(start, i - start).mean()});
      start = i;
    }
  }
  return out;
}

}  // namespace

GapAlignment gap_align(const SelfAdjointOperator& op, int j, double zero_tol, DecomposeOptions opts) {
  if (j < 1) throw Error("gap index must be >= 1");
  if (!(zero_tol >= 0.0)) throw Error("zero_tol must be nonnegative");
  opts.zero_tol = zero_tol;

  std::vector<Cluster> cl;
  std::optional<SpectralSplit> base;
  for (;;) {
    base.emplace(decompose(op, opts));
    cl = clusters_of(base->eigenvalues(), zero_tol);
    // On a partial decomposition the j-th cluster is only known to be complete
    // when a later stored cluster exists.
    const std::size_t need = base->complete() ? static_cast<std::size_t>(j)
                                              : static_cast<std::size_t>(j) + 1;
    if (cl.size() >= need) break;
    if (base->complete() || opts.sparse_pairs >= op.dim())
      throw Error("gap index " + std::to_string(j) + " exceeds the " + std::to_string(cl.size()) +
                  " eigenvalue clusters");
    opts.sparse_pairs = std::min<Eigen::Index>(op.dim(), 2 * opts.sparse_pairs);
    opts.backend = EigenBackend::sparse;
  }
  const Cluster& c = cl[static_cast<std::size_t>(j - 1)];
  double sigma0 = c.mean;

  // Classification tolerance wide enough for the whole cluster after the shift.
  double zt = zero_tol;
  for (Eigen::Index i = c.first; i <= c.last; ++i)
    zt = std::max(zt, std::abs(base->eigenvalues()[i] - sigma0) * (1.0 + 1e-9));
  DecomposeOptions shifted_opts = opts;
  shifted_opts.zero_tol = zt;
  const SpectralSplit first = decompose(op.shifted(sigma0), shifted_opts);

  // Re-center on the refined cluster so the kernel eigenvalue is exactly 0.
  const auto& ker = first.idx_kernel();
  if (ker.empty()) throw Error("gap alignment lost the kernel cluster");
  double corr = 0.0;
  for (Eigen::Index i : ker) corr += first.eigenvalues()[i];
  corr /= static_cast<double>(ker.size());
  sigma0 += corr;

  return GapAlignment{sigma0, op.shifted(sigma0), first.shifted(corr, zt),
                      static_cast<int>(cl.size())};
}

// ---------------------------------------------------------------------------
// pipeline

double discrete_h1_norm(const Grid& grid, const Eigen::VectorXd& r) {
  grid.validate();
  if (r.size() != grid.nodes()) throw DimensionError("discrete_h1_norm: vector has wrong length");
  const double h = grid.spacing();
  const double w = std::pow(h, grid.dimension);
  const int n = grid.n;
  auto at = [&](int i, int j) -> double {
    if (i < 0 || i >= n || j < 0 || (grid.dimension == 2 && j >= n)) return 0.0;
    return r[grid.dimension == 2 ? static_cast<Eigen::Index>(j) * n + i : i];
  };
  double grad = 0.0;
  const int jmax = grid.dimension == 2 ? n : 1;
  for (int j = 0; j < jmax; ++j)
    for (int i = -1; i < n; ++i) {
      const double d = (at(i + 1, j) - at(i, j)) / h;
      grad += d * d;
    }
  if (grid.dimension == 2)
    for (int i = 0; i < n; ++i)
      for (int j = -1; j < n; ++j) {
        const double d = (at(i, j + 1) - at(i, j)) / h;
        grad += d * d;
      }
  return std::sqrt(w * (r.squaredNorm() + grad));
}

CaseResult run_case(const SchrodingerProblem& problem, const CaseOptions& opts) {
  SchrodingerProblem base = problem;
  if (problem.gap_index) base.sigma0 = 0.0;
  Discretization disc = discretize(base);

  std::optional<SelfAdjointOperator> op;
  std::optional<SpectralSplit> split;
  CaseResult res;
  if (problem.gap_index) {
    GapAlignment ga = gap_align(disc.op, *problem.gap_index, opts.align_tol, opts.decompose);
    res.sigma0 = ga.sigma0;
    op.emplace(std::move(ga.op));
    split.emplace(std::move(ga.split));
  } else {
    res.sigma0 = problem.sigma0;
    split.emplace(decompose(disc.op, opts.decompose));
    op.emplace(std::move(disc.op));
  }

  const NonlinearMap n = superposition(problem.profile, disc.weights);
  res.weights = disc.weights;
  res.h = sample_rhs(problem.grid, problem.rhs);
  res.delta = split->delta();
  res.gamma = split->gamma();
  res.report = check_hypotheses(*split, n, res.h, opts.hypothesis);
  res.threshold_linear_delta_margin = res.report.threshold_linear_delta.margin;

  const Problem p{*op, *split, n, res.h};
  res.trace = solve_resonant(p, opts.continuation, res.report);
  if (res.trace.final_u)
    res.u = *res.trace.final_u;
  else if (!res.trace.records.empty() && res.trace.records.back().u.size())
    res.u = res.trace.records.back().u;
  else
    res.u = Eigen::VectorXd::Zero(op->dim());

  const Eigen::VectorXd r = residual(p, 0.0, res.u);
  res.residual_l2 = n.norm(r);
  res.residual_h1 = discrete_h1_norm(problem.grid, r);
  return res;
}

}  // namespace resonance
