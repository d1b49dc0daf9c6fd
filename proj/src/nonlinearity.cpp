#include "resonance/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "resonance/error.hpp"
#include "resonance/rng.hpp"

namespace resonance {

namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double central_difference(const ScalarProfile::Fn& f, std::ptrdiff_t node, double t) {
  const double h = 1e-7 * std::max(1.0, std::abs(t));
  return (f(node, t + h) - f(node, t - h)) / (2.0 * h);
}

std::vector<double> profile_t_grid() {
  std::vector<double> ts{0.0};
  for (double s : {1e-6, 1e-3, 1e-2, 0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 30.0, 100.0,
                   1e3, 1e4}) {
    ts.push_back(s);
    ts.push_back(-s);
  }
  for (int k = 0; k <= 200; ++k) ts.push_back(-20.0 + 0.2 * k);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

}  // namespace

double ScalarProfile::derivative(std::ptrdiff_t node, double t) const {
  if (df) return df(node, t);
  return central_difference(f, node, t);
}

// ---------------------------------------------------------------------------
// named profiles

namespace profiles {

ScalarProfile linear(double c) {
  if (!(c > 0.0)) throw ContractError("linear(c) needs c > 0");
  ScalarProfile p;
  p.name = "linear(" + fmt_num(c) + ")";
  p.f = [c](std::ptrdiff_t, double t) { return c * t; };
  p.df = [c](std::ptrdiff_t, double) { return c; };
  p.a = c;
  p.b = c;
  p.alpha = 1.0 / c;
  return p;
}

ScalarProfile tanh(double scale) {
  if (!(scale > 0.0)) throw ContractError("tanh(scale) needs scale > 0");
  ScalarProfile p;
  p.name = "tanh(" + fmt_num(scale) + ")";
  p.f = [scale](std::ptrdiff_t, double t) { return scale * std::tanh(t); };
  p.df = [scale](std::ptrdiff_t, double t) {
    const double th = std::tanh(t);
    return scale * (1.0 - th * th);
  };
  p.a = 0.0;
  p.b = scale;
  p.alpha = 1.0 / scale;
  return p;
}

ScalarProfile saturating(double a, double c) {
  if (!(a > 0.0) || !(c > 0.0)) throw ContractError("saturating(a, c) needs a, c > 0");
  // f'(t) = a + (c - a) phi(t^2), phi(s) = (s^2 + 3 s) / (1 + s)^2 ranges over [0, 9/8].
  const double slope_lo = std::min(a, a + 1.125 * (c - a));
  const double slope_hi = std::max(a, a + 1.125 * (c - a));
  if (slope_lo < 0.0)
    throw ContractError("saturating(a, c) is not monotone: needs 9c >= a");
  ScalarProfile p;
  p.name = "saturating(" + fmt_num(a) + "," + fmt_num(c) + ")";
  p.f = [a, c](std::ptrdiff_t, double t) {
    const double t2 = t * t;
    return (a + (c - a) * t2 / (1.0 + t2)) * t;
  };
  p.df = [a, c](std::ptrdiff_t, double t) {
    const double s = t * t;
    return a + (c - a) * (s * s + 3.0 * s) / ((1.0 + s) * (1.0 + s));
  };
  p.a = std::min(a, c);
  p.b = std::max(a, c);
  p.alpha = 1.0 / slope_hi;
  return p;
}

ScalarProfile piecewise_table(std::vector<double> t, std::vector<double> f, std::string name) {
  if (t.size() != f.size() || t.size() < 2)
    throw ContractError("piecewise table needs at least two (t, f) rows of equal length");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw ContractError("piecewise table abscissae must increase");
    if (f[i] < f[i - 1]) throw ContractError("piecewise table values must be nondecreasing");
  }
  const std::size_t m = t.size();
  std::vector<double> slope(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) slope[i] = (f[i + 1] - f[i]) / (t[i + 1] - t[i]);

  auto segment = [t, m](double x) -> std::size_t {
    // Segment whose half-open interval [t_i, t_{i+1}) contains x; right-hand
    // convention at nodes, end segments extended to infinity.
    if (x < t[1]) return 0;
    if (x >= t[m - 2]) return m - 2;
    auto it = std::upper_bound(t.begin(), t.end(), x);
    return static_cast<std::size_t>(it - t.begin()) - 1;
  };
  auto eval = [t, f, slope, segment](double x) {
    const std::size_t s = segment(x);
    return f[s] + slope[s] * (x - t[s]);
  };
  if (std::abs(eval(0.0)) > 1e-14 * std::max(1.0, *std::max_element(f.begin(), f.end())))
    throw ContractError("piecewise table must pass through (0, 0)");

  // Extremes of f(t)/t: nodes, end slopes and the slope of the segment through 0.
  double lo = std::min(slope.front(), slope.back());
  double hi = std::max(slope.front(), slope.back());
  const double s0 = slope[segment(0.0)];
  lo = std::min(lo, s0);
  hi = std::max(hi, s0);
  for (std::size_t i = 0; i < m; ++i)
    if (t[i] != 0.0) {
      const double r = f[i] / t[i];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  const double max_slope = *std::max_element(slope.begin(), slope.end());

  ScalarProfile p;
  p.name = std::move(name);
  p.f = [eval](std::ptrdiff_t, double x) { return eval(x); };
  p.df = [slope, segment](std::ptrdiff_t, double x) { return slope[segment(x)]; };
  p.a = std::max(0.0, lo);
  p.b = std::max(hi, 0.0);
  p.alpha = max_slope > 0.0 ? 1.0 / max_slope : std::numeric_limits<double>::infinity();
  return p;
}

ScalarProfile piecewise_table_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open profile table " + path.string());
  std::vector<double> t, f;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double a = 0.0, b = 0.0;
    if (!(ls >> a)) continue;
    if (!(ls >> b)) throw Error("profile table " + path.string() + ": malformed row '" + line + "'");
    t.push_back(a);
    f.push_back(b);
  }
  return piecewise_table(std::move(t), std::move(f), "piecewise_table(" + path.string() + ")");
}

}  // namespace profiles

ProfileCheck check_profile(const ScalarProfile& p, Eigen::Index dim) {
  ProfileCheck c;
  static const std::vector<double> ts = profile_t_grid();
  std::vector<std::ptrdiff_t> nodes;
  const std::ptrdiff_t stride = std::max<std::ptrdiff_t>(1, dim / 64);
  for (std::ptrdiff_t i = 0; i < dim; i += stride) nodes.push_back(i);
  if (dim > 0 && nodes.back() != dim - 1) nodes.push_back(dim - 1);

  const double lip = p.alpha > 0.0 ? 1.0 / p.alpha : std::numeric_limits<double>::infinity();
  for (std::ptrdiff_t x : nodes) {
    std::vector<double> fs(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) fs[k] = p.f(x, ts[k]);
    const double q = p.q_at(x);
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double t = ts[k], v = fs[k];
      const double tol = 1e-12 * std::max(1.0, std::abs(v));
      if (t == 0.0 && std::abs(v) > 1e-14) c.zero_at_origin = false;
      if (p.a > 0.0 && p.a * std::abs(t) > std::abs(v) + tol) c.lower_growth = false;
      if (std::abs(v) > q + p.b * std::abs(t) + tol) c.upper_growth = false;
      if (k > 0) {
        const double dv = v - fs[k - 1], dt = t - ts[k - 1];
        if (dv < -tol) c.monotone = false;
        if (std::abs(dv) > lip * dt * (1.0 + 1e-9) + tol) c.lipschitz = false;
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// NonlinearMap

NonlinearMap::NonlinearMap(Eigen::Index dim, Evaluator eval, std::optional<double> claimed_alpha,
                           JacobianFn jacobian, Eigen::VectorXd weights)
    : dim_(dim),
      eval_(std::move(eval)),
      claimed_alpha_(claimed_alpha),
      jacobian_(std::move(jacobian)),
      weights_(std::move(weights)) {
  if (dim_ < 1) throw DimensionError("nonlinear map dimension must be >= 1");
  if (!eval_) throw Error("nonlinear map needs an evaluator");
  if (weights_.size() == 0) weights_ = Eigen::VectorXd::Ones(dim_);
  if (weights_.size() != dim_) throw DimensionError("weights length differs from dimension");
  if (!(weights_.array() > 0.0).all()) throw Error("weights must be positive");
  if (claimed_alpha_ && !(*claimed_alpha_ > 0.0)) throw ContractError("claimed alpha must be > 0");

  const Eigen::VectorXd n0 = (*this)(Eigen::VectorXd::Zero(dim_));
  if (n0.cwiseAbs().maxCoeff() > 1e-12) throw ContractError("N(0) != 0");

  if (claimed_alpha_ && std::isfinite(*claimed_alpha_)) {
    const double est = estimate_cocoercivity(*this, sample_pairs(dim_, 32, 3.0, 0x5eed), Exec::serial);
    if (est < *claimed_alpha_ * (1.0 - 1e-9) - 1e-12)
      throw ContractError("claimed alpha " + fmt_num(*claimed_alpha_) +
                          " contradicted by sampled cocoercivity " + fmt_num(est));
  }
}

NonlinearMap NonlinearMap::scaled_identity(Eigen::Index dim, double c, Eigen::VectorXd weights) {
  if (!(c > 0.0)) throw ContractError("scaled identity needs c > 0");
  return NonlinearMap(
      dim, [c](const Eigen::VectorXd& u) -> Eigen::VectorXd { return c * u; }, 1.0 / c,
      [c](const Eigen::VectorXd& u) {
        Jacobian j;
        j.diag = Eigen::VectorXd::Constant(u.size(), c);
        return j;
      },
      std::move(weights));
}

Eigen::VectorXd NonlinearMap::operator()(const Eigen::VectorXd& u) const {
  if (u.size() != dim_) throw DimensionError("nonlinear map: argument has wrong length");
  return eval_(u);
}

Jacobian NonlinearMap::jacobian(const Eigen::VectorXd& u) const {
  if (u.size() != dim_) throw DimensionError("nonlinear map: argument has wrong length");
  if (jacobian_) return jacobian_(u);
  Jacobian j;
  j.diagonal = false;
  j.full.resize(dim_, dim_);
  kernels::for_each_index(dim_, [&](std::ptrdiff_t c) {
    const double h = 1e-7 * std::max(1.0, std::abs(u[c]));
    Eigen::VectorXd up = u, um = u;
    up[c] += h;
    um[c] -= h;
    j.full.col(c) = (eval_(up) - eval_(um)) / (2.0 * h);
  });
  return j;
}

double NonlinearMap::inner(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  return kernels::weighted_dot(kernels::view(x), kernels::view(y), kernels::view(weights_));
}

double NonlinearMap::norm(const Eigen::VectorXd& x) const { return std::sqrt(inner(x, x)); }

NonlinearMap superposition(const ScalarProfile& profile, const Eigen::VectorXd& weights) {
  const Eigen::Index dim = weights.size();
  if (dim < 1) throw DimensionError("superposition needs at least one node");
  if (!profile.f) throw Error("profile has no function");
  if (profile.q.size() != 0 && profile.q.size() != dim)
    throw DimensionError("profile offset q has wrong length");
  const ProfileCheck check = check_profile(profile, dim);
  if (!check.all()) {
    std::string why;
    if (!check.zero_at_origin) why += " f(x,0)!=0";
    if (!check.monotone) why += " non-monotone";
    if (!check.lower_growth) why += " lower-growth";
    if (!check.upper_growth) why += " upper-growth";
    if (!check.lipschitz) why += " lipschitz";
    throw ContractError("profile " + profile.name + " violates its claims:" + why);
  }
  auto p = std::make_shared<const ScalarProfile>(profile);
  auto eval = [p](const Eigen::VectorXd& u) {
    Eigen::VectorXd out(u.size());
    kernels::pointwise(p->f, kernels::view(u), kernels::view(out));
    return out;
  };
  auto jac = [p](const Eigen::VectorXd& u) {
    Jacobian j;
    j.diag.resize(u.size());
    kernels::pointwise([&](std::ptrdiff_t i, double t) { return p->derivative(i, t); },
                       kernels::view(u), kernels::view(j.diag));
    return j;
  };
  std::optional<double> alpha;
  if (std::isfinite(profile.alpha)) alpha = profile.alpha;
  // The sampled check already covered the profile; skip the generic one.
  NonlinearMap n(dim, eval, std::nullopt, jac, weights);
  n.claimed_alpha_ = alpha;
  n.profile_ = std::move(p);
  return n;
}

// ---------------------------------------------------------------------------
// estimators

std::vector<VectorPair> sample_pairs(Eigen::Index dim, int count, double half_width,
                                     std::uint64_t seed) {
  Rng rng(seed);
  std::vector<VectorPair> pairs;
  pairs.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd a = rng.uniform_vector(dim, -half_width, half_width);
    Eigen::VectorXd b = rng.uniform_vector(dim, -half_width, half_width);
    pairs.emplace_back(std::move(a), std::move(b));
  }
  return pairs;
}

double estimate_cocoercivity(const NonlinearMap& n, const std::vector<VectorPair>& pairs,
                             Exec exec) {
  if (pairs.empty()) throw Error("estimate_cocoercivity needs at least one pair");
  for (const auto& [a, b] : pairs)
    if (a.size() != n.dim() || b.size() != n.dim())
      throw DimensionError("estimate_cocoercivity: pair has wrong length");
  std::vector<double> ratio(pairs.size(), std::numeric_limits<double>::quiet_NaN());
  kernels::for_each_index(
      static_cast<std::ptrdiff_t>(pairs.size()),
      [&](std::ptrdiff_t k) {
        const auto& [a, b] = pairs[static_cast<std::size_t>(k)];
        const Eigen::VectorXd dn = n(a) - n(b);
        const double dn2 = n.inner(dn, dn);
        if (dn2 == 0.0) return;
        ratio[static_cast<std::size_t>(k)] = n.inner(dn, a - b) / dn2;
      },
      exec);
  double best = std::numeric_limits<double>::infinity();
  for (double r : ratio)
    if (!std::isnan(r)) best = std::min(best, r);
  return best;
}

double psi(const NonlinearMap& n, const Eigen::VectorXd& u) { return n.inner(n(u), u); }

std::vector<double> default_radial_schedule() {
  std::vector<double> s;
  for (int k = 0; k <= 40; ++k) s.push_back(std::ldexp(1.0, k));
  return s;
}

RadialResult radial_recession(const NonlinearMap& n, const Eigen::VectorXd& u,
                              const RadialOptions& opts) {
  if (u.size() != n.dim()) throw DimensionError("radial_recession: direction has wrong length");
  if (opts.schedule.empty()) throw Error("radial_recession: empty schedule");
  for (std::size_t k = 0; k < opts.schedule.size(); ++k) {
    if (!(opts.schedule[k] > 0.0)) throw Error("radial_recession: schedule must be positive");
    if (k > 0 && !(opts.schedule[k] > opts.schedule[k - 1]))
      throw Error("radial_recession: schedule must increase");
  }
  if (opts.require_unit && std::abs(n.norm(u) - 1.0) > 1e-8)
    throw Error("radial_recession: direction is not normalized");

  RadialResult res;
  res.heuristic = !n.known_monotone();
  double cap = 0.0;
  if (opts.divergence_cap) {
    cap = *opts.divergence_cap;
  } else {
    const double base = n.norm(n(u));
    cap = base > 0.0 ? 1e12 * base : 1e12;
  }

  for (double t : opts.schedule) {
    const double r = n.inner(n(t * u), u);
    if (!res.r.empty()) {
      const double prev = res.r.back();
      if (r < prev - 1e-10 * std::max(1.0, std::abs(prev)))
        throw ContractError("monotone contract violated: r(" + fmt_num(t) + ") = " + fmt_num(r) +
                            " < " + fmt_num(prev));
    }
    res.t.push_back(t);
    res.r.push_back(r);
    if (r > cap) {
      res.infinite = true;
      break;
    }
  }
  const std::size_t m = res.r.size();
  res.radial_upper_bound = res.infinite ? std::numeric_limits<double>::infinity() : res.r.back();
  res.last_increment = m >= 2 ? res.r[m - 1] - res.r[m - 2] : 0.0;
  if (m >= 3) {
    const double x0 = res.r[m - 3], x1 = res.r[m - 2], x2 = res.r[m - 1];
    const double den = x2 - 2.0 * x1 + x0;
    res.aitken_limit = std::abs(den) > 1e-300 ? x2 - (x2 - x1) * (x2 - x1) / den : x2;
  } else {
    res.aitken_limit = std::numeric_limits<double>::quiet_NaN();
  }
  return res;
}

}  // namespace resonance
