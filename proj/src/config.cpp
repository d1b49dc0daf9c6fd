#include "resonance/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

#include "resonance/error.hpp"
#include "resonance/io.hpp"
#include "resonance/rng.hpp"

namespace resonance::config {

namespace fs = std::filesystem;

namespace {

std::string child(const std::string& ptr, const std::string& key) {
  std::string k;
  for (char c : key) {
    if (c == '~') k += "~0";
    else if (c == '/') k += "~1";
    else k += c;
  }
  return ptr + "/" + k;
}

std::string child(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

void require_object(const json& j, const std::string& ptr) {
  if (!j.is_object()) throw ConfigError(ptr.empty() ? "/" : ptr, "expected an object");
}

void allow_keys(const json& j, const std::string& ptr, std::initializer_list<const char*> keys) {
  require_object(j, ptr);
  std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(child(ptr, k), "unknown key");
}

double as_number(const json& j, const std::string& ptr) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return kInf;
  }
  throw ConfigError(ptr, "expected a number");
}

long long as_integer(const json& j, const std::string& ptr) {
  if (j.is_number_integer() || j.is_number_unsigned()) return j.get<long long>();
  if (j.is_number_float()) {
    const double d = j.get<double>();
    if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<long long>(d);
  }
  throw ConfigError(ptr, "expected an integer");
}

std::string as_string(const json& j, const std::string& ptr) {
  if (!j.is_string()) throw ConfigError(ptr, "expected a string");
  return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& ptr) {
  if (!j.is_boolean()) throw ConfigError(ptr, "expected a boolean");
  return j.get<bool>();
}

double positive(const json& j, const std::string& ptr) {
  const double v = as_number(j, ptr);
  if (!(v > 0.0)) throw ConfigError(ptr, "must be positive");
  return v;
}

Eigen::VectorXd as_vector(const json& j, const std::string& ptr) {
  if (!j.is_array() || j.empty()) throw ConfigError(ptr, "expected a non-empty array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = as_number(j[i], child(ptr, i));
  return v;
}

Eigen::MatrixXd as_matrix(const json& j, const std::string& ptr) {
  if (!j.is_array() || j.empty()) throw ConfigError(ptr, "expected a non-empty array of rows");
  const std::size_t n = j.size();
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string rp = child(ptr, i);
    if (!j[i].is_array() || j[i].size() != n) throw ConfigError(rp, "expected a row of length " + std::to_string(n));
    for (std::size_t k = 0; k < n; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = as_number(j[i][k], child(rp, k));
  }
  return m;
}

fs::path resolve(const fs::path& base, const std::string& p, const std::string& ptr) {
  fs::path full = fs::path(p).is_absolute() ? fs::path(p) : base / p;
  if (!fs::exists(full)) throw ConfigError(ptr, "file not found: " + full.string());
  return full;
}

struct Call {
  std::string name;
  std::vector<std::string> args;
  bool has_parens = false;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

Call parse_call(const std::string& s, const std::string& ptr) {
  Call c;
  const auto open = s.find('(');
  if (open == std::string::npos) {
    c.name = trim(s);
    return c;
  }
  if (s.back() != ')') throw ConfigError(ptr, "malformed expression '" + s + "'");
  c.has_parens = true;
  c.name = trim(s.substr(0, open));
  const std::string inner = s.substr(open + 1, s.size() - open - 2);
  if (!trim(inner).empty()) {
    std::size_t start = 0;
    for (;;) {
      const auto comma = inner.find(',', start);
      c.args.push_back(trim(inner.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return c;
}

double arg_number(const Call& c, std::size_t i, const std::string& ptr) {
  if (i >= c.args.size()) throw ConfigError(ptr, c.name + ": missing argument " + std::to_string(i + 1));
  const std::string& a = c.args[i];
  double v = 0.0;
  const auto res = std::from_chars(a.data(), a.data() + a.size(), v);
  if (res.ec != std::errc() || res.ptr != a.data() + a.size())
    throw ConfigError(ptr, c.name + ": argument '" + a + "' is not a number");
  return v;
}

void arity(const Call& c, std::size_t n, const std::string& ptr) {
  if (c.args.size() != n)
    throw ConfigError(ptr, c.name + " takes " + std::to_string(n) + " argument(s), got " +
                               std::to_string(c.args.size()));
}

template <class F>
auto wrap(const std::string& ptr, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(ptr, e.what());
  }
}

EigenBackend parse_backend(const json& j, const std::string& ptr) {
  const std::string s = as_string(j, ptr);
  if (s == "automatic") return EigenBackend::automatic;
  if (s == "dense") return EigenBackend::dense;
  if (s == "sparse") return EigenBackend::sparse;
  throw ConfigError(ptr, "backend must be automatic, dense or sparse");
}

Grid parse_grid(const json& j, const std::string& ptr) {
  allow_keys(j, ptr, {"dimension", "half_width", "n", "center"});
  Grid g;
  if (j.contains("dimension")) g.dimension = static_cast<int>(as_integer(j["dimension"], child(ptr, "dimension")));
  if (g.dimension != 1 && g.dimension != 2) throw ConfigError(child(ptr, "dimension"), "must be 1 or 2");
  if (!j.contains("half_width")) throw ConfigError(child(ptr, "half_width"), "required");
  g.half_width = positive(j["half_width"], child(ptr, "half_width"));
  if (!j.contains("n")) throw ConfigError(child(ptr, "n"), "required");
  const long long n = as_integer(j["n"], child(ptr, "n"));
  if (n < 3) throw ConfigError(child(ptr, "n"), "must be >= 3");
  if (g.dimension == 2 && n > 4096) throw ConfigError(child(ptr, "n"), "too large for a 2D grid");
  g.n = static_cast<int>(n);
  if (j.contains("center")) {
    const json& c = j["center"];
    const std::string cp = child(ptr, "center");
    if (c.is_number()) {
      g.center = {c.get<double>(), c.get<double>()};
    } else {
      const Eigen::VectorXd v = as_vector(c, cp);
      if (v.size() != g.dimension) throw ConfigError(cp, "needs one coordinate per axis");
      g.center = {v[0], g.dimension == 2 ? v[1] : 0.0};
    }
  }
  return g;
}

}  // namespace

ScalarProfile parse_profile(const json& j, const std::string& ptr, const fs::path& base_dir) {
  return wrap(ptr, [&]() -> ScalarProfile {
    if (j.is_string()) {
      const Call c = parse_call(j.get<std::string>(), ptr);
      if (c.name == "linear") { arity(c, 1, ptr); return profiles::linear(arg_number(c, 0, ptr)); }
      if (c.name == "tanh") {
        if (c.args.empty()) return profiles::tanh(1.0);
        arity(c, 1, ptr);
        return profiles::tanh(arg_number(c, 0, ptr));
      }
      if (c.name == "saturating") {
        arity(c, 2, ptr);
        return profiles::saturating(arg_number(c, 0, ptr), arg_number(c, 1, ptr));
      }
      if (c.name == "piecewise_table") {
        arity(c, 1, ptr);
        return profiles::piecewise_table_file(resolve(base_dir, c.args[0], ptr));
      }
      throw ConfigError(ptr, "unknown profile '" + c.name + "'");
    }
    require_object(j, ptr);
    if (!j.contains("name")) throw ConfigError(child(ptr, "name"), "required");
    const std::string name = as_string(j["name"], child(ptr, "name"));
    if (name == "linear") {
      allow_keys(j, ptr, {"name", "c"});
      return profiles::linear(as_number(j.at("c"), child(ptr, "c")));
    }
    if (name == "tanh") {
      allow_keys(j, ptr, {"name", "scale"});
      return profiles::tanh(j.contains("scale") ? as_number(j["scale"], child(ptr, "scale")) : 1.0);
    }
    if (name == "saturating") {
      allow_keys(j, ptr, {"name", "a", "c"});
      if (!j.contains("a") || !j.contains("c")) throw ConfigError(ptr, "saturating needs a and c");
      return profiles::saturating(as_number(j["a"], child(ptr, "a")), as_number(j["c"], child(ptr, "c")));
    }
    if (name == "piecewise_table") {
      allow_keys(j, ptr, {"name", "file", "t", "f"});
      if (j.contains("file"))
        return profiles::piecewise_table_file(resolve(base_dir, as_string(j["file"], child(ptr, "file")), child(ptr, "file")));
      if (!j.contains("t") || !j.contains("f")) throw ConfigError(ptr, "piecewise_table needs file or t and f");
      const Eigen::VectorXd t = as_vector(j["t"], child(ptr, "t"));
      const Eigen::VectorXd f = as_vector(j["f"], child(ptr, "f"));
      return profiles::piecewise_table(std::vector<double>(t.data(), t.data() + t.size()),
                                       std::vector<double>(f.data(), f.data() + f.size()));
    }
    throw ConfigError(child(ptr, "name"), "unknown profile '" + name + "'");
  });
}

Potential parse_potential(const json& j, const std::string& ptr) {
  return wrap(ptr, [&]() -> Potential {
    if (j.is_string()) {
      const Call c = parse_call(j.get<std::string>(), ptr);
      if (c.name == "zero") { arity(c, 0, ptr); return Potential::zero(); }
      if (c.name == "finite_well") {
        arity(c, 2, ptr);
        return Potential::finite_well(arg_number(c, 0, ptr), arg_number(c, 1, ptr));
      }
      if (c.name == "double_well") {
        arity(c, 3, ptr);
        return Potential::double_well(arg_number(c, 0, ptr), arg_number(c, 1, ptr), arg_number(c, 2, ptr));
      }
      if (c.name == "cosine") {
        arity(c, 2, ptr);
        return Potential::cosine(arg_number(c, 0, ptr), arg_number(c, 1, ptr));
      }
      throw ConfigError(ptr, "unknown potential '" + c.name + "'");
    }
    require_object(j, ptr);
    if (!j.contains("name")) throw ConfigError(child(ptr, "name"), "required");
    const std::string name = as_string(j["name"], child(ptr, "name"));
    auto num = [&](const char* k) {
      if (!j.contains(k)) throw ConfigError(child(ptr, k), "required");
      return as_number(j[k], child(ptr, k));
    };
    if (name == "zero") { allow_keys(j, ptr, {"name"}); return Potential::zero(); }
    if (name == "finite_well") {
      allow_keys(j, ptr, {"name", "depth", "width"});
      return Potential::finite_well(num("depth"), num("width"));
    }
    if (name == "double_well") {
      allow_keys(j, ptr, {"name", "depth", "width", "separation"});
      return Potential::double_well(num("depth"), num("width"), num("separation"));
    }
    if (name == "cosine") {
      allow_keys(j, ptr, {"name", "amplitude", "period"});
      return Potential::cosine(num("amplitude"), num("period"));
    }
    throw ConfigError(child(ptr, "name"), "unknown potential '" + name + "'");
  });
}

RhsSpec parse_rhs(const json& j, const std::string& ptr, const fs::path& base_dir) {
  return wrap(ptr, [&]() -> RhsSpec {
    if (j.is_string()) {
      const std::string s = j.get<std::string>();
      if (s.rfind("file:", 0) == 0) return RhsSpec::from_file(resolve(base_dir, s.substr(5), ptr));
      const Call c = parse_call(s, ptr);
      if (c.name == "sin_k") {
        if (c.args.empty()) return RhsSpec::sin_k(1);
        arity(c, 1, ptr);
        const double k = arg_number(c, 0, ptr);
        if (std::floor(k) != k) throw ConfigError(ptr, "sin_k needs an integer k");
        return RhsSpec::sin_k(static_cast<int>(k));
      }
      if (c.name == "gaussian") {
        if (c.args.size() == 2) {
          const double x = arg_number(c, 0, ptr);
          return RhsSpec::gaussian({x, x}, arg_number(c, 1, ptr));
        }
        arity(c, 3, ptr);
        return RhsSpec::gaussian({arg_number(c, 0, ptr), arg_number(c, 1, ptr)}, arg_number(c, 2, ptr));
      }
      if (c.name == "constant") { arity(c, 1, ptr); return RhsSpec::constant(arg_number(c, 0, ptr)); }
      throw ConfigError(ptr, "unknown rhs '" + c.name + "'");
    }
    require_object(j, ptr);
    if (!j.contains("name")) throw ConfigError(child(ptr, "name"), "required");
    const std::string name = as_string(j["name"], child(ptr, "name"));
    if (name == "sin_k") {
      allow_keys(j, ptr, {"name", "k"});
      return RhsSpec::sin_k(j.contains("k") ? static_cast<int>(as_integer(j["k"], child(ptr, "k"))) : 1);
    }
    if (name == "gaussian") {
      allow_keys(j, ptr, {"name", "center", "width"});
      std::array<double, 2> c{0.0, 0.0};
      if (j.contains("center")) {
        const json& cj = j["center"];
        if (cj.is_number()) {
          c = {cj.get<double>(), cj.get<double>()};
        } else {
          const Eigen::VectorXd v = as_vector(cj, child(ptr, "center"));
          c = {v[0], v.size() > 1 ? v[1] : v[0]};
        }
      }
      if (!j.contains("width")) throw ConfigError(child(ptr, "width"), "required");
      return RhsSpec::gaussian(c, as_number(j["width"], child(ptr, "width")));
    }
    if (name == "constant") {
      allow_keys(j, ptr, {"name", "value"});
      return RhsSpec::constant(as_number(j.at("value"), child(ptr, "value")));
    }
    if (name == "file") {
      allow_keys(j, ptr, {"name", "path"});
      return RhsSpec::from_file(resolve(base_dir, as_string(j.at("path"), child(ptr, "path")), child(ptr, "path")));
    }
    throw ConfigError(child(ptr, "name"), "unknown rhs '" + name + "'");
  });
}

Eigen::VectorXd parse_start(const std::string& spec, Eigen::Index dim, const fs::path& base_dir) {
  if (spec == "zero") return Eigen::VectorXd::Zero(dim);
  if (spec.rfind("random:", 0) == 0) {
    const std::string s = spec.substr(7);
    std::uint64_t seed = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
      throw Error("start: bad seed in '" + spec + "'");
    Rng rng(seed);
    return rng.uniform_vector(dim, -1.0, 1.0);
  }
  if (spec.rfind("file:", 0) == 0) {
    fs::path p = spec.substr(5);
    if (p.is_relative() && !fs::exists(p)) p = base_dir / p;
    Eigen::VectorXd v = io::read_vector(p);
    if (v.size() != dim)
      throw DimensionError("start file " + p.string() + " has " + std::to_string(v.size()) +
                           " values, expected " + std::to_string(dim));
    return v;
  }
  throw Error("start must be zero, random:SEED or file:PATH");
}

ExperimentConfig parse_config(const json& j, const fs::path& base_dir) {
  allow_keys(j, "", {"mode", "seed", "problem", "spectral", "solver", "continuation", "hypothesis",
                     "sweep", "output_dir"});
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.base_dir = base_dir;
  if (j.contains("mode")) {
    cfg.mode = as_string(j["mode"], "/mode");
    if (cfg.mode != "check" && cfg.mode != "solve" && cfg.mode != "continuation" && cfg.mode != "sweep")
      throw ConfigError("/mode", "must be check, solve, continuation or sweep");
  }
  if (j.contains("seed")) {
    const long long s = as_integer(j["seed"], "/seed");
    if (s < 0) throw ConfigError("/seed", "must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (j.contains("output_dir")) cfg.output_dir = as_string(j["output_dir"], "/output_dir");
  cfg.hypothesis.seed = cfg.seed;
  cfg.decompose.seed = cfg.seed + 1;

  if (!j.contains("problem")) throw ConfigError("/problem", "required");
  const json& pj = j["problem"];
  require_object(pj, "/problem");
  const std::string type = pj.contains("type") ? as_string(pj["type"], "/problem/type") : "matrix";
  if (type == "schrodinger") {
    allow_keys(pj, "/problem", {"type", "grid", "potential", "sigma0", "gap_index", "profile", "rhs"});
    cfg.schrodinger = true;
    SchrodingerProblem& sp = cfg.schrodinger_problem;
    if (!pj.contains("grid")) throw ConfigError("/problem/grid", "required");
    sp.grid = parse_grid(pj["grid"], "/problem/grid");
    if (pj.contains("potential")) sp.potential = parse_potential(pj["potential"], "/problem/potential");
    if (pj.contains("sigma0")) sp.sigma0 = as_number(pj["sigma0"], "/problem/sigma0");
    if (pj.contains("gap_index")) {
      const long long g = as_integer(pj["gap_index"], "/problem/gap_index");
      if (g < 1) throw ConfigError("/problem/gap_index", "must be >= 1");
      sp.gap_index = static_cast<int>(g);
    }
    if (!pj.contains("profile")) throw ConfigError("/problem/profile", "required");
    sp.profile = parse_profile(pj["profile"], "/problem/profile", base_dir);
    if (pj.contains("rhs")) sp.rhs = parse_rhs(pj["rhs"], "/problem/rhs", base_dir);
  } else if (type == "matrix") {
    allow_keys(pj, "/problem", {"type", "matrix", "matrix_file", "diagonal", "profile", "h", "h_file", "weights"});
    const int sources = pj.contains("matrix") + pj.contains("matrix_file") + pj.contains("diagonal");
    if (sources != 1) throw ConfigError("/problem", "give exactly one of matrix, matrix_file, diagonal");
    if (pj.contains("matrix")) {
      const Eigen::MatrixXd m = as_matrix(pj["matrix"], "/problem/matrix");
      wrap("/problem/matrix", [&] { cfg.matrix.op.emplace(SelfAdjointOperator::from_dense(m)); return 0; });
    } else if (pj.contains("diagonal")) {
      cfg.matrix.op.emplace(SelfAdjointOperator::diagonal(as_vector(pj["diagonal"], "/problem/diagonal")));
    } else {
      const fs::path p = resolve(base_dir, as_string(pj["matrix_file"], "/problem/matrix_file"), "/problem/matrix_file");
      wrap("/problem/matrix_file", [&] { cfg.matrix.op.emplace(io::read_coo(p)); return 0; });
    }
    const Eigen::Index n = cfg.matrix.op->dim();
    if (!pj.contains("profile")) throw ConfigError("/problem/profile", "required");
    cfg.matrix.profile = parse_profile(pj["profile"], "/problem/profile", base_dir);
    if (pj.contains("h") == pj.contains("h_file")) throw ConfigError("/problem", "give exactly one of h, h_file");
    if (pj.contains("h")) {
      cfg.matrix.h = as_vector(pj["h"], "/problem/h");
      if (cfg.matrix.h.size() != n) throw ConfigError("/problem/h", "length differs from the matrix dimension");
    } else {
      const fs::path p = resolve(base_dir, as_string(pj["h_file"], "/problem/h_file"), "/problem/h_file");
      cfg.matrix.h = wrap("/problem/h_file", [&] { return io::read_vector(p); });
      if (cfg.matrix.h.size() != n) throw ConfigError("/problem/h_file", "length differs from the matrix dimension");
    }
    if (pj.contains("weights")) {
      cfg.matrix.weights = as_vector(pj["weights"], "/problem/weights");
      if (cfg.matrix.weights.size() != n) throw ConfigError("/problem/weights", "length differs from the matrix dimension");
      if (!(cfg.matrix.weights.array() > 0.0).all()) throw ConfigError("/problem/weights", "must be positive");
    }
  } else {
    throw ConfigError("/problem/type", "must be matrix or schrodinger");
  }

  if (j.contains("spectral")) {
    const json& s = j["spectral"];
    allow_keys(s, "/spectral", {"zero_tol", "backend", "dense_max_dim", "sparse_pairs", "align_tol", "refine"});
    if (s.contains("zero_tol")) {
      const double z = as_number(s["zero_tol"], "/spectral/zero_tol");
      if (!(z >= 0.0)) throw ConfigError("/spectral/zero_tol", "must be nonnegative");
      cfg.decompose.zero_tol = z;
    }
    if (s.contains("backend")) cfg.decompose.backend = parse_backend(s["backend"], "/spectral/backend");
    if (s.contains("dense_max_dim")) cfg.decompose.dense_max_dim = as_integer(s["dense_max_dim"], "/spectral/dense_max_dim");
    if (s.contains("sparse_pairs")) {
      cfg.decompose.sparse_pairs = as_integer(s["sparse_pairs"], "/spectral/sparse_pairs");
      if (cfg.decompose.sparse_pairs < 1) throw ConfigError("/spectral/sparse_pairs", "must be >= 1");
    }
    if (s.contains("align_tol")) cfg.align_tol = positive(s["align_tol"], "/spectral/align_tol");
    if (s.contains("refine")) cfg.decompose.refine = as_bool(s["refine"], "/spectral/refine");
  }

  if (j.contains("solver")) {
    const json& s = j["solver"];
    allow_keys(s, "/solver", {"eps", "tol", "max_iter", "max_picard_iter", "backend", "start", "alpha", "fallback"});
    if (s.contains("eps")) cfg.eps = as_number(s["eps"], "/solver/eps");
    if (s.contains("tol")) cfg.solver.tol = positive(s["tol"], "/solver/tol");
    if (s.contains("max_iter")) {
      cfg.solver.max_iter = static_cast<int>(as_integer(s["max_iter"], "/solver/max_iter"));
      if (cfg.solver.max_iter < 1) throw ConfigError("/solver/max_iter", "must be >= 1");
    }
    if (s.contains("max_picard_iter")) {
      cfg.solver.max_picard_iter = static_cast<int>(as_integer(s["max_picard_iter"], "/solver/max_picard_iter"));
      if (cfg.solver.max_picard_iter < 1) throw ConfigError("/solver/max_picard_iter", "must be >= 1");
    }
    if (s.contains("backend")) {
      const std::string b = as_string(s["backend"], "/solver/backend");
      if (b == "newton") cfg.solver.backend = SolverBackend::newton;
      else if (b == "picard") cfg.solver.backend = SolverBackend::picard;
      else throw ConfigError("/solver/backend", "must be newton or picard");
    }
    if (s.contains("start")) cfg.start = as_string(s["start"], "/solver/start");
    if (s.contains("alpha")) cfg.solver.alpha = positive(s["alpha"], "/solver/alpha");
    if (s.contains("fallback")) cfg.solver.allow_fallback = as_bool(s["fallback"], "/solver/fallback");
  }

  if (j.contains("continuation")) {
    const json& c = j["continuation"];
    allow_keys(c, "/continuation", {"eps0", "rho", "kmax", "tol", "norm_cap", "eps_prime", "solve_tol_factor"});
    if (c.contains("eps0")) cfg.continuation.eps0 = positive(c["eps0"], "/continuation/eps0");
    if (c.contains("rho")) {
      cfg.continuation.rho = as_number(c["rho"], "/continuation/rho");
      if (!(cfg.continuation.rho > 0.0 && cfg.continuation.rho < 1.0))
        throw ConfigError("/continuation/rho", "must lie in (0, 1)");
    }
    if (c.contains("kmax")) {
      cfg.continuation.k_max = static_cast<int>(as_integer(c["kmax"], "/continuation/kmax"));
      if (cfg.continuation.k_max < 0) throw ConfigError("/continuation/kmax", "must be nonnegative");
    }
    if (c.contains("tol")) cfg.continuation.tol = positive(c["tol"], "/continuation/tol");
    if (c.contains("norm_cap")) cfg.continuation.norm_cap = positive(c["norm_cap"], "/continuation/norm_cap");
    if (c.contains("eps_prime")) cfg.continuation.eps_prime = positive(c["eps_prime"], "/continuation/eps_prime");
    if (c.contains("solve_tol_factor"))
      cfg.continuation.solve_tol_factor = positive(c["solve_tol_factor"], "/continuation/solve_tol_factor");
  }

  if (j.contains("hypothesis")) {
    const json& h = j["hypothesis"];
    allow_keys(h, "/hypothesis", {"alpha_pairs", "alpha_box", "random_rays", "alpha", "a_claimed"});
    if (h.contains("alpha_pairs")) {
      cfg.hypothesis.alpha_pairs = static_cast<int>(as_integer(h["alpha_pairs"], "/hypothesis/alpha_pairs"));
      if (cfg.hypothesis.alpha_pairs < 1) throw ConfigError("/hypothesis/alpha_pairs", "must be >= 1");
    }
    if (h.contains("alpha_box")) cfg.hypothesis.alpha_box = positive(h["alpha_box"], "/hypothesis/alpha_box");
    if (h.contains("random_rays")) {
      cfg.hypothesis.random_rays = static_cast<int>(as_integer(h["random_rays"], "/hypothesis/random_rays"));
      if (cfg.hypothesis.random_rays < 0) throw ConfigError("/hypothesis/random_rays", "must be nonnegative");
    }
    if (h.contains("alpha")) cfg.hypothesis.alpha = positive(h["alpha"], "/hypothesis/alpha");
    if (h.contains("a_claimed")) cfg.hypothesis.a_claimed = positive(h["a_claimed"], "/hypothesis/a_claimed");
  }

  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    allow_keys(s, "/sweep", {"axes"});
    if (!s.contains("axes")) throw ConfigError("/sweep/axes", "required");
    const json& axes = s["axes"];
    require_object(axes, "/sweep/axes");
    for (const auto& [k, v] : axes.items()) {
      const std::string ap = child("/sweep/axes", k);
      if (k.empty() || k[0] != '/') throw ConfigError(ap, "axis key must be a JSON pointer");
      if (k.rfind("/sweep", 0) == 0) throw ConfigError(ap, "cannot sweep the sweep block");
      if (!v.is_array() || v.empty()) throw ConfigError(ap, "expected a non-empty array of values");
      cfg.sweep.push_back({k, std::vector<json>(v.begin(), v.end())});
    }
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

std::vector<std::pair<json, std::vector<std::pair<std::string, json>>>> expand_sweep(
    const ExperimentConfig& cfg) {
  json base = cfg.raw;
  base.erase("sweep");
  std::vector<std::pair<json, std::vector<std::pair<std::string, json>>>> cases;
  if (cfg.sweep.empty()) {
    cases.push_back({base, {}});
    return cases;
  }
  std::vector<std::size_t> idx(cfg.sweep.size(), 0);
  for (;;) {
    json c = base;
    std::vector<std::pair<std::string, json>> over;
    for (std::size_t a = 0; a < cfg.sweep.size(); ++a) {
      const auto& ax = cfg.sweep[a];
      const json& v = ax.values[idx[a]];
      try {
        c[json::json_pointer(ax.pointer)] = v;
      } catch (const json::exception& e) {
        throw ConfigError(child("/sweep/axes", ax.pointer), e.what());
      }
      over.emplace_back(ax.pointer, v);
    }
    cases.emplace_back(std::move(c), std::move(over));
    std::size_t a = cfg.sweep.size();
    while (a > 0) {
      --a;
      if (++idx[a] < cfg.sweep[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return cases;
    }
  }
}

BuiltProblem build_problem(const ExperimentConfig& cfg) {
  BuiltProblem b;
  if (cfg.schrodinger) {
    const SchrodingerProblem& sp = cfg.schrodinger_problem;
    SchrodingerProblem base = sp;
    if (sp.gap_index) base.sigma0 = 0.0;
    Discretization d = discretize(base);
    if (sp.gap_index) {
      GapAlignment ga = gap_align(d.op, *sp.gap_index, cfg.align_tol, cfg.decompose);
      b.sigma0 = ga.sigma0;
      b.op.emplace(std::move(ga.op));
      b.split.emplace(std::move(ga.split));
    } else {
      b.sigma0 = sp.sigma0;
      b.split.emplace(decompose(d.op, cfg.decompose));
      b.op.emplace(std::move(d.op));
    }
    b.n.emplace(superposition(sp.profile, d.weights));
    b.h = sample_rhs(sp.grid, sp.rhs);
    return b;
  }
  b.op.emplace(*cfg.matrix.op);
  b.split.emplace(decompose(*b.op, cfg.decompose));
  const Eigen::VectorXd w = cfg.matrix.weights.size() ? cfg.matrix.weights
                                                      : Eigen::VectorXd::Ones(b.op->dim());
  b.n.emplace(superposition(cfg.matrix.profile, w));
  b.h = cfg.matrix.h;
  return b;
}

}  // namespace resonance::config
