#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ehfl/config.hpp"
#include "ehfl/metrics.hpp"
#include "ehfl/timeline.hpp"

namespace ehfl {

struct RunResult {
  RunLabel label;
  RunArtifacts artifacts;
  bool ok = true;
  std::string error;  // set when the run diverged
};

std::string make_run_id(const Config& config);
RunLabel make_label(const Config& config);

/// Runs one configuration to completion. Divergence is reported in the result,
/// configuration errors propagate.
RunResult run_single(const Config& config);

std::string render_csv(const RunResult& result, bool header = true);

/// Writes <dir>/<run_id>.csv and <dir>/<run_id>.json.
void write_run_outputs(const std::filesystem::path& dir, const Config& config, const RunResult& result);

/// Ordered sweep axes; each axis is a config key and its textual values.
using SweepGrid = std::vector<std::pair<std::string, std::vector<std::string>>>;

/// Cartesian product of the axes in the given order (first axis varies slowest).
std::vector<Config> expand_grid(const SweepGrid& grid, const Config& base);

struct SweepOutcome {
  std::vector<RunResult> runs;
  int failures = 0;
};

/// Runs every grid point, writes per-run outputs plus <dir>/merged.csv.
SweepOutcome run_sweep(const SweepGrid& grid, const Config& base, const std::filesystem::path& dir);

/// Output directory: $EHFL_OUTPUT_DIR when set, otherwise config.output.
std::filesystem::path output_dir(const Config& config);

}  // namespace ehfl
