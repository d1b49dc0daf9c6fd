#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <Eigen/Core>
#include <json.hpp>

#include "resonance/continuation.hpp"
#include "resonance/hypothesis.hpp"
#include "resonance/operator_core.hpp"
#include "resonance/perturbed_solver.hpp"

namespace resonance::io {

using nlohmann::json;

/// Shortest decimal form that round-trips; "inf", "-inf", "nan" otherwise.
std::string format_double(double x);

/// Finite values as JSON numbers, non-finite ones as the strings of format_double.
json number(double x);
json vector_json(const Eigen::VectorXd& v);

/// Coordinate-format text: header `dim <n> nnz <k>` then k lines `row col value`
/// with 0-based indices. Both triangles must be listed; '#' starts a comment.
SelfAdjointOperator read_coo(const std::filesystem::path& path, std::optional<double> symmetry_tol = {});
void write_coo(const std::filesystem::path& path, const SelfAdjointOperator& op);

/// Header `dim <n>`, then one value per line.
Eigen::VectorXd read_vector(const std::filesystem::path& path);
void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v);
void write_vector(std::ostream& out, const Eigen::VectorXd& v);

json to_json(const SpectralChecks& s);
json to_json(const ThresholdCheck& t);
json to_json(const AlphaAssessment& a);
json to_json(const SignRecessionReport& r);
json to_json(const ProfileCheck& p);
json to_json(const HypothesisReport& r);
json to_json(const PerturbedSolveResult& r, bool include_solution = false);
json to_json(const UniquenessResult& r);
json to_json(const ContinuationRecord& r, bool include_solution = false);
json to_json(const ContinuationTrace& t, bool include_iterates = false);

/// One row per record: k, epsilon, norms, residuals, monitor values.
void write_trace_csv(std::ostream& out, const ContinuationTrace& t);
void write_trace_csv(const std::filesystem::path& path, const ContinuationTrace& t);

/// Writes `j.dump(2)` plus a newline.
void write_json(const std::filesystem::path& path, const json& j);

}  // namespace resonance::io
