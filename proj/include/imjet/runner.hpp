#pragma once

#include "imjet/parasolve.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace imjet {

/// Configuration does not match the published schema.
struct SchemaError : InputError {
    using InputError::InputError;
};

enum ExitCode : int { kExitOk = 0, kExitGate = 1, kExitSchema = 2, kExitLadder = 3, kExitSolver = 4 };

/// Known task names in execution-order-independent form.
const std::vector<std::string>& task_names();

nlohmann::json load_config(const std::string& path);
/// `a.b.c=value`; value parsed as JSON when possible, otherwise taken as a string.
void apply_override(nlohmann::json& cfg, const std::string& assignment);
/// Throws SchemaError naming the offending path.
void validate_config(const nlohmann::json& cfg);
/// FNV-1a of the canonical (key-sorted, compact) JSON, as 16 hex digits.
std::string config_hash(const nlohmann::json& cfg);

SemilinearProblem build_problem(const nlohmann::json& model);
SolverOptions solver_options(const nlohmann::json& cfg);

struct RunOptions {
    std::string out_dir;                          // overrides cfg.output_dir when nonempty
    std::optional<std::uint64_t> seed;            // overrides cfg.seed
    std::optional<std::vector<std::string>> tasks; // overrides cfg.tasks
};

/// Runs the tasks in order, writing <task>.report.json files and manifest.json into the
/// output directory (held under a lock file). Returns the exit code; failures also write
/// error.report.json.
int run_experiment(nlohmann::json cfg, const RunOptions& opts = {});

} // namespace imjet
