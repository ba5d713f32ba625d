#pragma once

// Run configuration, experiment orchestration and report assembly behind the
// opideal command-line tool.

#include "opideal/json_io.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace opideal::cli {

inline constexpr const char* kToolName = "opideal";
inline constexpr const char* kToolVersion = "0.1.0";

/// Invalid configuration or request; exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Budgets {
  std::uint64_t subset_cap = 10'000'000;
  double lp_tolerance = 1e-6;
  /// 0 selects the command's default sample count.
  std::size_t samples = 0;
  std::size_t trials = 8;
  std::size_t max_tries = 1000;
  std::uint64_t milman_budget = 10'000'000;
  friend bool operator==(const Budgets&, const Budgets&) = default;
};

struct RunConfig {
  std::string command;
  /// Preset name (string) or {"p": number, "levels": [{"u", "v"}, ...]}.
  json schedule = "tiny";
  std::uint64_t seed = 1;
  Budgets budgets;
  std::optional<std::vector<std::size_t>> M;
  std::optional<std::vector<std::size_t>> N;
  std::size_t m = 1;
  std::string lemma = "formal-id";
  std::string post_pass = "refine";
  std::vector<std::size_t> orders;
  std::vector<std::size_t> dims;
  std::optional<std::size_t> level;
  std::optional<std::size_t> M_cols;
  std::string input;
  std::string out;
  std::string csv;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

const std::vector<std::string>& command_names();
const std::vector<std::string>& lemma_names();

/// Throws UsageError on unknown keys, wrong types or invalid values.
RunConfig parse_config(const json& j);
json to_json(const RunConfig& config);
/// The config as echoed in reports: output destinations omitted.
json config_echo(const RunConfig& config);

ParamSchedule resolve_schedule(const json& spec);

struct RunOptions {
  std::size_t threads = 0;
};

struct RunOutcome {
  json report;
  int exit_code = 0;
};

/// Pure function of the config (thread count only affects speed).
RunOutcome run(const RunConfig& config, const RunOptions& options = {});

/// 1 if any verdict has status "fail", else 0.
int exit_code_for(const json& report);

/// Removes timing keys (elapsed_ms, wall_ms, runtime) at every depth.
json strip_timing(json report);

}  // namespace opideal::cli
