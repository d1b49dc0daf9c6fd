#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "resonance/cli.hpp"
#include "resonance/config.hpp"
#include "resonance/error.hpp"
#include "resonance/io.hpp"

using namespace resonance;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("resonance_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "resonance");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

json diag_config() {
  return json::parse(R"j({
    "seed": 1,
    "problem": {"type": "matrix", "diagonal": [-3, -1, 0, 2], "profile": "linear(0.25)", "h": [1, 1, 1, 1]}
  })j");
}

json schrodinger_config() {
  return json::parse(R"j({
    "seed": 7,
    "problem": {
      "type": "schrodinger",
      "grid": {"dimension": 1, "half_width": 1.5707963267948966, "n": 99, "center": 1.5707963267948966},
      "potential": "zero",
      "gap_index": 2,
      "profile": {"name": "saturating", "a": 0.2, "c": 0.45},
      "rhs": "sin_k(1)"
    }
  })j");
}

void write(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

}  // namespace

TEST_CASE("number formatting round-trips") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) CHECK(std::stod(io::format_double(x)) == x);
  CHECK(io::format_double(kInf) == "inf");
  CHECK(io::format_double(-kInf) == "-inf");
  CHECK(io::number(kInf) == "inf");
}

TEST_CASE("vector files round-trip") {
  const fs::path d = scratch("vec");
  const Eigen::Vector4d v(0.1, -1.0 / 3.0, 1e-17, 12345.678);
  io::write_vector(d / "v.vec", v);
  CHECK(slurp(d / "v.vec").rfind("dim 4\n", 0) == 0);
  const Eigen::VectorXd w = io::read_vector(d / "v.vec");
  CHECK(w == Eigen::VectorXd(v));
  std::ofstream(d / "bad.vec") << "dim 3\n1\n2\n";
  CHECK_THROWS_AS(io::read_vector(d / "bad.vec"), Error);
}

TEST_CASE("COO files") {
  const fs::path d = scratch("coo");
  Eigen::Matrix3d a;
  a << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  io::write_coo(d / "a.coo", SelfAdjointOperator::from_dense(a));
  CHECK((io::read_coo(d / "a.coo").to_dense() - a).norm() == 0.0);
  std::ofstream(d / "asym.coo") << "dim 2 nnz 1\n0 1 1.0\n";
  CHECK_THROWS_AS(io::read_coo(d / "asym.coo"), SymmetryError);
  std::ofstream(d / "range.coo") << "dim 2 nnz 1\n0 5 1.0\n";
  CHECK_THROWS_AS(io::read_coo(d / "range.coo"), Error);
}

TEST_CASE("config errors name the offending pointer") {
  json j = diag_config();
  j["problem"]["profile"] = "cubic(2)";
  try {
    config::parse_config(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "/problem/profile");
  }
  json k = diag_config();
  k["continuation"] = {{"rho", 1.5}};
  try {
    config::parse_config(k);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "/continuation/rho");
  }
  json u = diag_config();
  u["solver"] = {{"tolerance", 1}};
  CHECK_THROWS_AS(config::parse_config(u), ConfigError);
  json f = diag_config();
  f["problem"].erase("h");
  f["problem"]["h_file"] = "does_not_exist.vec";
  try {
    config::parse_config(f);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "/problem/h_file");
  }
}

TEST_CASE("config parses profiles, potentials and rhs") {
  CHECK(config::parse_profile("tanh(2)", "/p").f(0, 100.0) == doctest::Approx(2.0));
  CHECK(config::parse_profile(json{{"name", "linear"}, {"c", 0.5}}, "/p").alpha == doctest::Approx(2.0));
  CHECK(config::parse_potential("double_well(1,0.5,2)", "/v").kind == "double_well");
  CHECK(config::parse_rhs("gaussian(0.5,0.25)", "/h").width == doctest::Approx(0.25));
  CHECK(config::parse_rhs("constant(3)", "/h").value == doctest::Approx(3.0));
  CHECK_THROWS_AS(config::parse_rhs("sin_k(1.5)", "/h"), ConfigError);
  CHECK(config::parse_start("random:4", 3).cwiseAbs().maxCoeff() <= 1.0);
  CHECK(config::parse_start("random:4", 3) == config::parse_start("random:4", 3));
  CHECK_THROWS_AS(config::parse_start("ones", 3), Error);
}

TEST_CASE("sweep expansion") {
  json j = diag_config();
  j["sweep"] = json::parse(R"j({"axes": {"/continuation/rho": [0.1, 0.2], "/problem/profile": ["linear(0.25)", "linear(0.2)", "linear(0.1)"]}})j");
  const auto cfg = config::parse_config(j);
  const auto cases = config::expand_sweep(cfg);
  CHECK(cases.size() == 6);
  CHECK(cases[0].first["continuation"]["rho"] == 0.1);
  CHECK(cases[5].first["problem"]["profile"] == "linear(0.1)");
  CHECK_FALSE(cases[3].first.contains("sweep"));
}

TEST_CASE("cli: check, solve with eps = 0, version") {
  const fs::path d = scratch("cli_check");
  write(d / "diag.json", diag_config());
  CHECK(cli({"check", "--config", (d / "diag.json").string(), "--output-dir", (d / "out").string()}) == 0);
  const json r = json::parse(slurp(d / "out/report.json"));
  CHECK(r["spectral"]["L1_zero_in_spectrum"] == true);
  CHECK(r["spectral"]["L2_gap"] == true);
  CHECK(r["spectral"]["L3_lower_bound"] == true);
  CHECK(r["threshold"]["margin"].get<double>() == doctest::Approx(1.0));
  CHECK(cli({"solve", "--config", (d / "diag.json").string(), "--eps", "0", "--output-dir", (d / "s").string()}) == 1);
  CHECK(cli({"version"}) == 0);
  CHECK(cli({"frobnicate"}) == 1);
  CHECK(cli({"check", "--config", (d / "missing.json").string()}) == 1);
}

TEST_CASE("cli: continuation output and round-trip start file") {
  const fs::path d = scratch("cli_cont");
  write(d / "s.json", schrodinger_config());
  const std::string cfgp = (d / "s.json").string();
  REQUIRE(cli({"continuation", "--config", cfgp, "--output-dir", (d / "a").string()}) == 0);
  std::ifstream csv(d / "a/trace.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line.rfind("k,epsilon,", 0) == 0);
  double prev = kInf;
  int rows = 0;
  while (std::getline(csv, line)) {
    const double eps = std::stod(line.substr(line.find(',') + 1));
    CHECK(eps < prev);
    prev = eps;
    ++rows;
  }
  CHECK(rows > 1);

  REQUIRE(cli({"continuation", "--config", cfgp, "--output-dir", (d / "b").string()}) == 0);
  CHECK(slurp(d / "a/trace.csv") == slurp(d / "b/trace.csv"));
  CHECK(slurp(d / "a/report.json") == slurp(d / "b/report.json"));
  CHECK(slurp(d / "a/trace.json") == slurp(d / "b/trace.json"));

  const std::string start = "file:" + (d / "a/solution.vec").string();
  CHECK(cli({"solve", "--config", cfgp, "--eps", "1e-6", "--start", start, "--output-dir", (d / "c").string()}) == 0);
}

TEST_CASE("cli: blowup exit code and sweep") {
  const fs::path d = scratch("cli_sweep");
  json t = json::parse(R"j({"problem": {"type": "matrix", "diagonal": [-2, 0, 2], "profile": "tanh(1)", "h": [0, 2, 0]}})j");
  write(d / "t.json", t);
  CHECK(cli({"continuation", "--config", (d / "t.json").string(), "--output-dir", (d / "t").string()}) == 2);

  json s = diag_config();
  s["sweep"] = json::parse(R"j({"axes": {"/continuation/rho": [0.2, 0.5]}})j");
  write(d / "s.json", s);
  CHECK(cli({"sweep", "--config", (d / "s.json").string(), "--jobs", "2", "--output-dir", (d / "w").string()}) == 0);
  CHECK(fs::exists(d / "w/case_000/trace.csv"));
  CHECK(fs::exists(d / "w/case_001/trace.csv"));
  const std::string summary = slurp(d / "w/summary.csv");
  CHECK(summary.find("converged") != std::string::npos);
}
