#pragma once

#include <string>
#include <vector>

#include "shiftlab/config.hpp"
#include "shiftlab/verify.hpp"

namespace shiftlab {

/// Representative trajectory for plot-ready CSV output.
struct PathDump {
    std::vector<double> times;
    std::vector<std::vector<double>> states;  // one row per time, mode columns
};

struct SuiteResult {
    std::string suite;
    std::vector<CheckReport> checks;
    PathDump path_dump;  // filled only when requested
    bool has_path_dump = false;
};

/// FNV-1a hash over every numeric output (formatted %.17g) and verdict,
/// excluding wall times: equal configs and seed give equal hashes for any
/// worker count.
std::uint64_t determinism_hash(const SuiteResult& result);

/// Serialized report.json contents (timing carried in a separate key that
/// the determinism hash never covers).
std::string report_json(const SuiteResult& result, const ExperimentConfig& cfg);

/// One row per check.
std::string summary_csv(const SuiteResult& result);

/// time, mode-k state columns.
std::string paths_csv(const PathDump& dump);

/// Writes report.json / summary.csv / paths.csv into cfg.output.directory
/// according to cfg.output.format; file writes go through a temp file and
/// rename.  Returns the paths written.
std::vector<std::string> emit_report(const SuiteResult& result, const ExperimentConfig& cfg);

/// 0 all pass, 1 any fail, 3 any inconclusive (none failed).
int aggregate_exit_code(const std::vector<CheckReport>& checks);

}  // namespace shiftlab
