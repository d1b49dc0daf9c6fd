#include "resonance/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "resonance/config.hpp"
#include "resonance/error.hpp"
#include "resonance/io.hpp"

namespace resonance {

namespace {

namespace fs = std::filesystem;
using config::ExperimentConfig;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> eps;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<std::string> backend;
  std::optional<std::string> start;
  std::optional<double> eps0;
  std::optional<double> rho;
  std::optional<int> kmax;
  std::optional<double> ctol;
  std::optional<double> norm_cap;
};

void apply_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.hypothesis.seed = seed;
  cfg.decompose.seed = seed + 1;
}

void apply(ExperimentConfig& cfg, const Overrides& o) {
  if (o.seed) apply_seed(cfg, *o.seed);
  if (o.eps) cfg.eps = *o.eps;
  if (o.tol) {
    if (!(*o.tol > 0.0)) throw Error("--tol must be positive");
    cfg.solver.tol = *o.tol;
  }
  if (o.max_iter) {
    if (*o.max_iter < 1) throw Error("--max-iter must be >= 1");
    cfg.solver.max_iter = *o.max_iter;
  }
  if (o.backend) cfg.solver.backend = *o.backend == "picard" ? SolverBackend::picard : SolverBackend::newton;
  if (o.start) cfg.start = *o.start;
  if (o.eps0) {
    if (!(*o.eps0 > 0.0)) throw Error("--eps0 must be positive");
    cfg.continuation.eps0 = *o.eps0;
  }
  if (o.rho) {
    if (!(*o.rho > 0.0 && *o.rho < 1.0)) throw Error("--rho must lie in (0, 1)");
    cfg.continuation.rho = *o.rho;
  }
  if (o.kmax) {
    if (*o.kmax < 0) throw Error("--kmax must be nonnegative");
    cfg.continuation.k_max = *o.kmax;
  }
  if (o.ctol) {
    if (!(*o.ctol > 0.0)) throw Error("--tol must be positive");
    cfg.continuation.tol = *o.ctol;
  }
  if (o.norm_cap) {
    if (!(*o.norm_cap > 0.0)) throw Error("--norm-cap must be positive");
    cfg.continuation.norm_cap = *o.norm_cap;
  }
}

json problem_json(const ExperimentConfig& cfg, const config::BuiltProblem& b) {
  json j;
  j["dim"] = b.op->dim();
  j["seed"] = cfg.seed;
  if (cfg.schrodinger) {
    const SchrodingerProblem& sp = cfg.schrodinger_problem;
    j["type"] = "schrodinger";
    j["dimension"] = sp.grid.dimension;
    j["n"] = sp.grid.n;
    j["potential"] = sp.potential.describe();
    j["rhs"] = sp.rhs.describe();
    j["sigma0"] = io::number(b.sigma0);
    if (sp.gap_index) j["gap_index"] = *sp.gap_index;
  } else {
    j["type"] = "matrix";
  }
  j["profile"] = cfg.schrodinger ? cfg.schrodinger_problem.profile.name : cfg.matrix.profile.name;
  return j;
}

struct RunOutcome {
  int exit_code = 0;
  std::string status;
  double residual = 0.0;
};

RunOutcome run_check(const ExperimentConfig& cfg, const std::optional<fs::path>& out, bool print) {
  const config::BuiltProblem b = config::build_problem(cfg);
  const HypothesisReport r = check_hypotheses(*b.split, *b.n, b.h, cfg.hypothesis);
  json j = io::to_json(r);
  j["problem"] = problem_json(cfg, b);
  if (out) io::write_json(*out / "report.json", j);
  if (print) std::cout << j.dump(2) << '\n';
  return {0, r.overall ? "hypotheses_hold" : "hypotheses_fail", 0.0};
}

RunOutcome run_solve(const ExperimentConfig& cfg, const fs::path& out, bool print) {
  if (!cfg.eps) throw Error("solve needs --eps or solver.eps");
  if (!(*cfg.eps > 0.0)) throw Error("epsilon must be positive for solve");
  const config::BuiltProblem b = config::build_problem(cfg);
  PerturbedOptions opts = cfg.solver;
  opts.start = config::parse_start(cfg.start, b.op->dim(), cfg.base_dir);
  const PerturbedSolveResult r = solve_perturbed(b.view(), *cfg.eps, opts);
  json j = io::to_json(r);
  j["problem"] = problem_json(cfg, b);
  io::write_json(out / "solve.json", j);
  io::write_vector(out / "solution.vec", r.u);
  if (print)
    std::cout << "solve: " << (r.converged ? "converged" : "not converged") << " eps="
              << io::format_double(r.epsilon) << " residual=" << io::format_double(r.residual_norm)
              << " iterations=" << r.iterations << " backend=" << to_string(r.backend) << '\n';
  return {r.converged ? 0 : 1, r.converged ? "converged" : "not_converged", r.residual_norm};
}

RunOutcome run_continuation(const ExperimentConfig& cfg, const fs::path& out, bool print) {
  const config::BuiltProblem b = config::build_problem(cfg);
  const HypothesisReport report = check_hypotheses(*b.split, *b.n, b.h, cfg.hypothesis);
  ContinuationOptions opts = cfg.continuation;
  opts.solver = cfg.solver;
  opts.solver.start = config::parse_start(cfg.start, b.op->dim(), cfg.base_dir);
  const ContinuationTrace t = solve_resonant(b.view(), opts, report);

  json rj = io::to_json(report);
  rj["problem"] = problem_json(cfg, b);
  io::write_json(out / "report.json", rj);
  json tj = io::to_json(t);
  tj["problem"] = problem_json(cfg, b);
  io::write_json(out / "trace.json", tj);
  io::write_trace_csv(out / "trace.csv", t);
  if (t.final_u) io::write_vector(out / "solution.vec", *t.final_u);

  const double res = t.records.empty() ? 0.0 : t.records.back().unperturbed_residual;
  if (print) {
    std::cout << "continuation: " << to_string(t.status) << " steps=" << t.records.size()
              << " residual=" << io::format_double(res)
              << " hypotheses=" << (report.overall ? "hold" : "fail") << '\n';
    if (!t.message.empty()) std::cout << "  " << t.message << '\n';
  }
  int code = 1;
  if (t.status == ContinuationStatus::converged) code = 0;
  else if (t.status == ContinuationStatus::norm_blowup) code = 2;
  return {code, to_string(t.status), res};
}

RunOutcome run_mode(const ExperimentConfig& cfg, const std::string& mode, const fs::path& out,
                    bool print) {
  if (mode == "check") return run_check(cfg, out, print);
  if (mode == "solve") return run_solve(cfg, out, print);
  return run_continuation(cfg, out, print);
}

std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

int run_sweep(const ExperimentConfig& cfg, const Overrides& o, const fs::path& out, int jobs) {
  const auto cases = config::expand_sweep(cfg);
  std::vector<RunOutcome> outcomes(cases.size());
  std::vector<std::string> modes(cases.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cases.size()) return;
      char name[32];
      std::snprintf(name, sizeof name, "case_%03zu", i);
      const fs::path dir = out / name;
      RunOutcome r;
      try {
        ExperimentConfig c = config::parse_config(cases[i].first, cfg.base_dir);
        apply(c, o);
        modes[i] = c.mode.empty() || c.mode == "sweep" ? "continuation" : c.mode;
        fs::create_directories(dir);
        io::write_json(dir / "config.json", cases[i].first);
        r = run_mode(c, modes[i], dir, false);
      } catch (const std::exception& e) {
        r = {1, "error", 0.0};
        std::lock_guard lock(log_mutex);
        std::cerr << name << ": " << e.what() << '\n';
      }
      outcomes[i] = r;
    }
  };

  const int n_threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(cases.size(), 1)));
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  fs::create_directories(out);
  std::ofstream csv(out / "summary.csv");
  if (!csv) throw Error("cannot write " + (out / "summary.csv").string());
  csv << "case";
  for (const auto& ax : cfg.sweep) csv << ',' << csv_field(ax.pointer);
  csv << ",mode,status,exit_code,residual\n";
  int worst = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    csv << i;
    for (const auto& [ptr, v] : cases[i].second) csv << ',' << csv_field(v.is_string() ? v.get<std::string>() : v.dump());
    csv << ',' << modes[i] << ',' << outcomes[i].status << ',' << outcomes[i].exit_code << ','
        << io::format_double(outcomes[i].residual) << '\n';
    if (outcomes[i].exit_code == 1) worst = 1;
    else if (outcomes[i].exit_code == 2 && worst == 0) worst = 2;
  }
  std::cout << "sweep: " << cases.size() << " cases written to " << out.string() << '\n';
  return worst;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Resonant semilinear equations: hypothesis checks and eps-continuation solver"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> output_dir;
  Overrides o;
  int jobs = 1;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--output-dir", output_dir, "Root directory for artifacts");
    sub->add_option("--seed", o.seed, "Seed for every sampled check");
  };

  CLI::App* check = app.add_subcommand("check", "Evaluate the hypotheses and print the report");
  common(check);

  CLI::App* solve = app.add_subcommand("solve", "One perturbed solve at a fixed eps");
  common(solve);
  solve->add_option("--eps", o.eps, "Perturbation eps > 0");
  solve->add_option("--tol", o.tol, "Residual tolerance relative to max(1, ||h||)");
  solve->add_option("--max-iter", o.max_iter, "Newton iteration limit");
  solve->add_option("--backend", o.backend, "newton or picard")->check(CLI::IsMember({"newton", "picard"}));
  solve->add_option("--start", o.start, "zero, random:SEED or file:PATH");

  CLI::App* cont = app.add_subcommand("continuation", "Run the eps schedule towards eps = 0");
  common(cont);
  cont->add_option("--eps0", o.eps0, "First eps");
  cont->add_option("--rho", o.rho, "Schedule ratio in (0, 1)");
  cont->add_option("--kmax", o.kmax, "Last schedule index");
  cont->add_option("--tol", o.ctol, "Unperturbed residual tolerance relative to max(1, ||h||)");
  cont->add_option("--norm-cap", o.norm_cap, "Blowup threshold on ||u_k||");
  cont->add_option("--start", o.start, "zero, random:SEED or file:PATH");

  CLI::App* sweep = app.add_subcommand("sweep", "Run every case of the sweep block");
  common(sweep);
  sweep->add_option("--jobs", jobs, "Concurrent cases")->check(CLI::PositiveNumber);

  app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand("version")) {
      std::cout << "resonance " << kVersion << '\n';
      return 0;
    }
    ExperimentConfig cfg = config::load_config(config_path);
    apply(cfg, o);
    std::optional<fs::path> out;
    if (output_dir) out = *output_dir;
    else if (cfg.output_dir) out = *cfg.output_dir;

    if (app.got_subcommand("check")) return run_check(cfg, out, true).exit_code;
    const fs::path root = out.value_or("out");
    if (app.got_subcommand("solve")) return run_solve(cfg, root, true).exit_code;
    if (app.got_subcommand("continuation")) return run_continuation(cfg, root, true).exit_code;
    return run_sweep(cfg, o, root, jobs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace resonance
