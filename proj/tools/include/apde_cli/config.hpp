#pragma once

#include "apde/exponents.hpp"
#include "apde/fokker_planck.hpp"
#include "apde/grid.hpp"
#include "apde/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace apde::cli {

struct InitialSpec {
    /// indicator-box | bump | field-file | barenblatt
    std::string kind = "indicator-box";
    std::vector<double> center;
    std::vector<double> half_width;
    double amplitude = 1.0;
    double radius = 0.5;
    std::filesystem::path path;
    /// Mass of the closed-form isotropic solution (kind = barenblatt).
    double mass = 1e-3;
};

struct VerifySpec {
    std::vector<std::string> suites;
    double c1 = 1.0;
    std::vector<double> c2 = {1.0};
    std::vector<double> rho = {0.1, 0.2};
    std::vector<double> probe_times;
    /// Probe points at fraction * half_width_1(t*) along axis 1.
    std::vector<double> probe_fractions = {0.0, 0.25, 0.5};
    std::vector<double> degiorgi_a = {0.25, 0.5, 1.0};
    std::size_t degiorgi_lattice = 12;
    std::vector<double> support_r0;
    double support_origin = 0.0;
    double support_late_fraction = 0.5;
    std::size_t comparison_pairs = 10;
    std::size_t comparison_steps = 100;
    std::vector<double> selfsim_rho = {0.5, 2.0};
    double cluster_lambda = 0.5;
    double cluster_nu = 0.1;
    double cluster_alpha_bar = 0.1;
    double cluster_a = 0.5;
    int cluster_depth = 4;
    /// Extra semigroup applications after the Barenblatt build.
    int stability_applications = 5;
};

struct RunConfig {
    std::string name = "run";
    /// evolve | barenblatt
    std::string mode = "evolve";
    std::vector<double> p;
    Grid grid;
    SolverConfig solver;
    double t0 = 1.0;
    double t1 = 2.0;
    InitialSpec initial;
    FixedPointConfig fixed_point;
    VerifySpec verify;
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 0;
    /// Normalised text the config was parsed from (hashed into the manifest).
    std::string source_text;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

private:
    std::vector<std::string> errors_;
};

/// Parses `section.key = value` lines ('#' starts a comment, lists are
/// comma-separated). Every problem is collected: unknown or duplicate keys,
/// malformed values (naming the line) and violated module preconditions.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
RunConfig parse_config(const std::filesystem::path& path);

/// Names of the shipped presets.
const std::vector<std::string>& preset_names();
/// Config text of a shipped preset; throws std::out_of_range for unknown names.
const std::string& preset_text(const std::string& name);

/// Validated initial datum for the configured grid.
Field make_initial(const RunConfig& cfg, const ExponentData& e);

} // namespace apde::cli
