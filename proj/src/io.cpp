#include "resonance/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "resonance/error.hpp"

namespace resonance::io {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

json number(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

namespace {

std::string strip_comment(std::string line) {
  const auto hash = line.find('#');
  if (hash != std::string::npos) line.erase(hash);
  return line;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

[[noreturn]] void bad_line(const std::filesystem::path& path, int lineno, const std::string& why) {
  throw Error(path.string() + ":" + std::to_string(lineno) + ": " + why);
}

}  // namespace

SelfAdjointOperator read_coo(const std::filesystem::path& path, std::optional<double> symmetry_tol) {
  std::ifstream in = open_in(path);
  std::string line;
  int lineno = 0;
  long long n = -1, nnz = -1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_comment(line);
    if (blank(line)) continue;
    std::istringstream ls(line);
    std::string d, z;
    if (!(ls >> d >> n >> z >> nnz) || d != "dim" || z != "nnz")
      bad_line(path, lineno, "expected header 'dim <n> nnz <k>'");
    break;
  }
  if (n < 1) throw Error(path.string() + ": missing or invalid header");
  if (nnz < 0) throw Error(path.string() + ": negative nnz");

  std::vector<Eigen::Triplet<double>> trips;
  std::set<std::pair<long long, long long>> seen;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_comment(line);
    if (blank(line)) continue;
    std::istringstream ls(line);
    long long r = 0, c = 0;
    double v = 0.0;
    if (!(ls >> r >> c >> v)) bad_line(path, lineno, "expected 'row col value'");
    std::string extra;
    if (ls >> extra) bad_line(path, lineno, "trailing characters");
    if (r < 0 || c < 0 || r >= n || c >= n) bad_line(path, lineno, "index out of range");
    if (!std::isfinite(v)) bad_line(path, lineno, "non-finite value");
    if (!seen.insert({r, c}).second) bad_line(path, lineno, "duplicate entry");
    trips.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
  }
  if (static_cast<long long>(trips.size()) != nnz)
    throw Error(path.string() + ": header announces " + std::to_string(nnz) + " entries, found " +
                std::to_string(trips.size()));
  for (const auto& [r, c] : seen)
    if (r != c && !seen.count({c, r}))
      throw SymmetryError(path.string() + ": entry (" + std::to_string(r) + ", " +
                          std::to_string(c) + ") has no transposed partner");
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());
  return SelfAdjointOperator::from_sparse(a, symmetry_tol);
}

void write_coo(const std::filesystem::path& path, const SelfAdjointOperator& op) {
  const Eigen::SparseMatrix<double> a = op.to_sparse();
  std::ofstream out = open_out(path);
  out << "dim " << a.rows() << " nnz " << a.nonZeros() << "\n";
  for (Eigen::Index k = 0; k < a.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << format_double(it.value()) << "\n";
}

Eigen::VectorXd read_vector(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  int lineno = 0;
  long long n = -1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_comment(line);
    if (blank(line)) continue;
    std::istringstream ls(line);
    std::string d;
    if (!(ls >> d >> n) || d != "dim" || n < 1) bad_line(path, lineno, "expected header 'dim <n>'");
    break;
  }
  if (n < 1) throw Error(path.string() + ": missing header");
  Eigen::VectorXd v(n);
  long long k = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_comment(line);
    if (blank(line)) continue;
    const auto first = line.find_first_not_of(" \t");
    const auto last = line.find_last_not_of(" \t\r");
    const std::string tok = line.substr(first, last - first + 1);
    double x = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      bad_line(path, lineno, "not a number: '" + tok + "'");
    if (k >= n) bad_line(path, lineno, "more values than announced");
    v[k++] = x;
  }
  if (k != n)
    throw Error(path.string() + ": header announces " + std::to_string(n) + " values, found " +
                std::to_string(k));
  return v;
}

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  out << "dim " << v.size() << "\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) out << format_double(v[i]) << "\n";
}

void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v) {
  std::ofstream out = open_out(path);
  write_vector(out, v);
}

// ---------------------------------------------------------------------------
// reports

json to_json(const SpectralChecks& s) {
  return {{"L1_zero_in_spectrum", s.zero_in_spectrum},
          {"nearest_eigenvalue", number(s.nearest_eigenvalue)},
          {"L2_gap", s.gap},
          {"delta", number(s.delta)},
          {"L3_lower_bound", s.lower_bound},
          {"gamma", number(s.gamma)},
          {"zero_tol", number(s.zero_tol)}};
}

json to_json(const ThresholdCheck& t) {
  return {{"ok", t.ok}, {"ratio", number(t.ratio)}, {"margin", number(t.margin)}};
}

json to_json(const AlphaAssessment& a) {
  json j = {{"alpha", number(a.alpha)},
            {"estimate", number(a.estimate)},
            {"claimed_confirmed", a.claimed_confirmed},
            {"pairs", a.pairs},
            {"box", number(a.box)}};
  j["claimed"] = a.claimed ? number(*a.claimed) : json(nullptr);
  return j;
}

json to_json(const ProfileCheck& p) {
  return {{"zero_at_origin", p.zero_at_origin}, {"monotone", p.monotone},
          {"lower_growth", p.lower_growth},     {"upper_growth", p.upper_growth},
          {"lipschitz", p.lipschitz},           {"all", p.all()}};
}

json to_json(const SignRecessionReport& r) {
  json rays = json::array();
  for (const auto& e : r.rays)
    rays.push_back({{"kind", to_string(e.kind)},
                    {"index", e.index},
                    {"radial_slope", number(e.radial_slope)},
                    {"radial_infinite", e.radial_infinite},
                    {"coercivity_ratio", number(e.coercivity_ratio)},
                    {"sign_ok", e.sign_ok},
                    {"h_pairing", number(e.h_pairing)}});
  json kernel = json::array();
  for (const auto& k : r.kernel)
    kernel.push_back({{"basis_index", k.basis_index},
                      {"sign", k.sign},
                      {"scale", number(k.scale)},
                      {"radial_value", number(k.radial_value)},
                      {"radial_infinite", k.radial_infinite},
                      {"threshold_plain", number(k.threshold_plain)},
                      {"threshold_scaled", number(k.threshold_scaled)}});
  json j = {{"bound_B", number(r.bound_B)},
            {"bound_defined", r.bound_defined},
            {"coercivity_certificate", r.coercivity_certificate},
            {"coercivity_min_ratio", number(r.coercivity_min_ratio)},
            {"sign_condition", to_string(r.sign_condition)},
            {"kernel_recession", to_string(r.kernel_recession)},
            {"kernel_recession_prime", to_string(r.kernel_recession_prime)},
            {"heuristic", r.heuristic},
            {"monotone_violation", r.monotone_violation},
            {"certificate_consistent", r.certificate_consistent},
            {"rays", std::move(rays)},
            {"kernel_rays", std::move(kernel)}};
  j["a_claimed"] = r.a_claimed ? number(*r.a_claimed) : json(nullptr);
  return j;
}

json to_json(const HypothesisReport& r) {
  json j;
  j["spectral"] = to_json(r.spectral);
  j["cocoercivity"] = to_json(r.alpha);
  j["cocoercivity_alpha"] = number(r.alpha.alpha);
  j["threshold"] = to_json(r.threshold);
  j["threshold_ok"] = r.threshold.ok;
  j["threshold_gamma_over_delta"] = to_json(r.threshold_linear_delta);
  j["sign_condition_ok"] = r.sign.sign_condition != Verdict::failed;
  j["kernel_recession"] = to_string(r.sign.kernel_recession);
  j["sign_and_recession"] = to_json(r.sign);
  j["profile_checks"] = r.has_profile ? to_json(r.profile) : json(nullptr);
  j["norm_h"] = number(r.norm_h);
  j["overall"] = r.overall;
  j["proof_grade"] = r.proof_grade;
  return j;
}

json to_json(const PerturbedSolveResult& r, bool include_solution) {
  json j = {{"epsilon", number(r.epsilon)},
            {"residual_norm", number(r.residual_norm)},
            {"target", number(r.target)},
            {"iterations", r.iterations},
            {"newton_iterations", r.newton_iterations},
            {"picard_iterations", r.picard_iterations},
            {"converged", r.converged},
            {"alpha", number(r.alpha)},
            {"strong_monotonicity_C", number(r.strong_monotonicity_C)},
            {"monotone_regime", r.monotone_regime},
            {"backend", to_string(r.backend)},
            {"fell_back", r.fell_back},
            {"message", r.message}};
  if (include_solution) j["u"] = vector_json(r.u);
  return j;
}

json to_json(const UniquenessResult& r) {
  json solves = json::array();
  for (const auto& s : r.solves) solves.push_back(to_json(s));
  return {{"status", to_string(r.status)},
          {"max_distance", number(r.max_distance)},
          {"threshold", number(r.threshold)},
          {"solves", std::move(solves)}};
}

json to_json(const ContinuationRecord& r, bool include_solution) {
  json m = {{"available", r.monitor.available},
            {"lhs", number(r.monitor.lhs)},
            {"rhs", number(r.monitor.rhs)},
            {"slack", number(r.monitor.slack)},
            {"ratio_value", number(r.monitor.ratio_value)},
            {"ratio_bound", number(r.monitor.ratio_bound)},
            {"ratio_ok", r.monitor.ratio_ok}};
  json j = {{"k", r.k},
            {"epsilon", number(r.epsilon)},
            {"norm_u", number(r.norm_u)},
            {"norm_u_minus", number(r.norm_u_minus)},
            {"norm_u_plus", number(r.norm_u_plus)},
            {"norm_Nu", number(r.norm_Nu)},
            {"perturbed_residual", number(r.perturbed_residual)},
            {"unperturbed_residual", number(r.unperturbed_residual)},
            {"iterations", r.iterations},
            {"solve_converged", r.solve_converged},
            {"backend", to_string(r.backend)},
            {"strong_monotonicity_C", number(r.strong_monotonicity_C)},
            {"monitor_step1_ok", r.monitor_step1_ok},
            {"monitor", std::move(m)}};
  if (include_solution && r.u.size()) j["u"] = vector_json(r.u);
  return j;
}

json to_json(const ContinuationTrace& t, bool include_iterates) {
  json recs = json::array();
  for (const auto& r : t.records) recs.push_back(to_json(r, include_iterates));
  json j = {{"status", to_string(t.status)},
            {"message", t.message},
            {"alpha", number(t.alpha)},
            {"eps_prime", number(t.eps_prime)},
            {"norm_h", number(t.norm_h)},
            {"norm_cap", number(t.norm_cap)},
            {"target", number(t.target)},
            {"slack_divergence_k", t.slack_divergence_k},
            {"records", std::move(recs)}};
  j["final_u"] = t.final_u ? vector_json(*t.final_u) : json(nullptr);
  j["hypotheses"] = t.hypotheses ? to_json(*t.hypotheses) : json(nullptr);
  return j;
}

void write_trace_csv(std::ostream& out, const ContinuationTrace& t) {
  out << "k,epsilon,norm_u,norm_u_minus,norm_u_plus,norm_Nu,perturbed_residual,"
         "unperturbed_residual,iterations,backend,strong_monotonicity_C,slack,ratio_value,"
         "ratio_bound,monitor_step1_ok\n";
  for (const auto& r : t.records) {
    out << r.k << ',' << format_double(r.epsilon) << ',' << format_double(r.norm_u) << ','
        << format_double(r.norm_u_minus) << ',' << format_double(r.norm_u_plus) << ','
        << format_double(r.norm_Nu) << ',' << format_double(r.perturbed_residual) << ','
        << format_double(r.unperturbed_residual) << ',' << r.iterations << ','
        << to_string(r.backend) << ',' << format_double(r.strong_monotonicity_C) << ','
        << (r.monitor.available ? format_double(r.monitor.slack) : "") << ','
        << (r.monitor.available ? format_double(r.monitor.ratio_value) : "") << ','
        << (r.monitor.available ? format_double(r.monitor.ratio_bound) : "") << ','
        << (r.monitor_step1_ok ? 1 : 0) << "\n";
  }
}

void write_trace_csv(const std::filesystem::path& path, const ContinuationTrace& t) {
  std::ofstream out = open_out(path);
  write_trace_csv(out, t);
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace resonance::io
