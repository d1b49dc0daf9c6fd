#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "resonance/continuation.hpp"
#include "resonance/hypothesis.hpp"
#include "resonance/nonlinearity.hpp"
#include "resonance/operator_core.hpp"
#include "resonance/perturbed_solver.hpp"
#include "resonance/schrodinger.hpp"

namespace resonance::config {

using nlohmann::json;

struct MatrixProblem {
  std::optional<SelfAdjointOperator> op;
  ScalarProfile profile;
  Eigen::VectorXd h;
  Eigen::VectorXd weights;  // empty: unit weights
};

struct SweepAxis {
  std::string pointer;  // JSON pointer into the config
  std::vector<json> values;
};

struct ExperimentConfig {
  std::string mode;  // check, solve, continuation, sweep (may be empty)
  std::uint64_t seed = 0;
  bool schrodinger = false;
  SchrodingerProblem schrodinger_problem;
  MatrixProblem matrix;
  DecomposeOptions decompose;
  double align_tol = 1e-8;
  HypothesisOptions hypothesis;
  PerturbedOptions solver;
  std::optional<double> eps;
  std::string start = "zero";
  ContinuationOptions continuation;
  std::vector<SweepAxis> sweep;
  std::optional<std::filesystem::path> output_dir;
  json raw;
  std::filesystem::path base_dir;
};

/// Parses a configuration; relative paths resolve against `base_dir`. Throws
/// ConfigError naming the JSON pointer of the offending value, and Error for
/// unreadable referenced files.
ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

/// "linear(0.5)", "tanh(1)", "saturating(0.2,0.45)", "piecewise_table(FILE)" or the
/// object forms {"name": ..., parameters}.
ScalarProfile parse_profile(const json& j, const std::string& pointer,
                            const std::filesystem::path& base_dir = ".");
Potential parse_potential(const json& j, const std::string& pointer);
RhsSpec parse_rhs(const json& j, const std::string& pointer,
                  const std::filesystem::path& base_dir = ".");

/// "zero", "random:SEED" (entries uniform in [-1, 1]) or "file:PATH".
Eigen::VectorXd parse_start(const std::string& spec, Eigen::Index dim,
                            const std::filesystem::path& base_dir = ".");

/// Cartesian product of the sweep axes applied to `raw`, sweep block removed.
std::vector<std::pair<json, std::vector<std::pair<std::string, json>>>> expand_sweep(
    const ExperimentConfig& cfg);

/// Operator, split and nonlinear map assembled from a configuration.
struct BuiltProblem {
  std::optional<SelfAdjointOperator> op;
  std::optional<SpectralSplit> split;
  std::optional<NonlinearMap> n;
  Eigen::VectorXd h;
  double sigma0 = 0.0;
  Problem view() const { return Problem{*op, *split, *n, h}; }
};

BuiltProblem build_problem(const ExperimentConfig& cfg);

}  // namespace resonance::config
