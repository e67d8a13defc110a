#pragma once

#include "apde/fokker_planck.hpp"
#include "apde/grid.hpp"
#include "apde_cli/config.hpp"
#include "apde_cli/outputs.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace apde::cli {

/// Report of one verification suite: JSON document plus a plot-ready CSV
/// table (empty when the suite has no tabular output).
struct SuiteReport {
    std::string suite;
    nlohmann::json json;
    std::string csv;
};

/// Runs the named suite against a trajectory. "selfsim" needs a profile and
/// "comparison" ignores the trajectory.
SuiteReport run_trajectory_suite(const std::string& suite, const Trajectory& traj, const ExponentData& e,
                                 const RunConfig& cfg);

SuiteReport run_profile_suite(const std::string& suite, const BarenblattProfile& profile, const RunConfig& cfg);

/// Writes reports/<suite>.json and reports/<suite>.csv below dir.
void write_report(const std::filesystem::path& dir, const SuiteReport& report);

nlohmann::json profile_json(const BarenblattProfile& profile);

struct ScenarioOutcome {
    int status = 0;
    std::filesystem::path directory;
    std::vector<ManifestEntry> files;
    std::string error;
};

/// Executes the configured run into <out_dir>/<name> via a staging
/// directory. On failure nothing is published except
/// <out_dir>/<name>.error.json and the status is nonzero.
ScenarioOutcome run_scenario(const RunConfig& cfg);

} // namespace apde::cli
