#include "apde_cli/commands.hpp"

#include "apde/field_io.hpp"
#include "apde/geometry.hpp"
#include "apde/parallel.hpp"
#include "apde_cli/config.hpp"
#include "apde_cli/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

namespace apde::cli {
namespace {

using nlohmann::json;

struct Globals {
    unsigned threads = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

RunConfig load(const std::string& spec, const Globals& g)
{
    RunConfig cfg;
    if (std::filesystem::is_regular_file(spec))
        cfg = parse_config(spec);
    else {
        const auto& names = preset_names();
        if (std::find(names.begin(), names.end(), spec) == names.end())
            throw ConfigError({"'" + spec + "' is neither a config file nor a preset"});
        cfg = parse_config_text(preset_text(spec), "preset:" + spec);
    }
    if (g.seed) cfg.seed = *g.seed;
    if (g.out_dir) cfg.out_dir = *g.out_dir;
    return cfg;
}

json exponents_json(const ExponentData& e)
{
    const AdmissibilityReport rep = validate_admissible(e);
    return {{"n", e.n},         {"p", e.p},         {"p_bar", e.p_bar},       {"sigma", e.sigma},
            {"alpha", e.alpha}, {"alpha_i", e.alpha_i}, {"q_space", e.q_space}, {"q_time", e.q_time},
            {"gamma", e.gamma}, {"admissible", rep.ok}, {"violations", rep.violations}};
}

} // namespace

int run_cli(int argc, char** argv)
{
    CLI::App app{"Anisotropic p-Laplacian experiments: scaling, evolution, Barenblatt profiles, verification"};
    app.require_subcommand(1);
    Globals globals;
    app.add_option("--threads", globals.threads, "Worker threads (0: hardware concurrency)")->capture_default_str();
    app.add_option("--seed", globals.seed, "Override the configured RNG seed");
    app.add_option("--out-dir", globals.out_dir, "Override the configured output directory");

    // exponents
    auto* exps_cmd = app.add_subcommand("exponents", "Print the scaling constants of an exponent vector");
    std::vector<double> p_list;
    std::optional<int> n_opt;
    exps_cmd->add_option("--p", p_list, "Exponents p_1,...,p_N")->required()->delimiter(',');
    exps_cmd->add_option("--n", n_opt, "Dimension (checked against the number of exponents)");

    // transform
    auto* tr_cmd = app.add_subcommand("transform", "Apply a scaling element to a field file");
    std::string tr_in, tr_out;
    double tr_rho = 1.0;
    std::optional<double> tr_theta;
    bool tr_zero = false, tr_renorm = false, tr_pullback = false;
    tr_cmd->add_option("--in", tr_in, "Input field file")->required()->check(CLI::ExistingFile);
    tr_cmd->add_option("--out", tr_out, "Output field file")->required();
    tr_cmd->add_option("--rho", tr_rho, "Group parameter rho")->required();
    tr_cmd->add_option("--theta", tr_theta, "Group parameter theta (default rho^-N, mass preserving)");
    tr_cmd->add_flag("--zero-extension", tr_zero, "Treat the field as compactly supported");
    tr_cmd->add_flag("--renormalize", tr_renorm, "Match the analytic image of the mass");
    tr_cmd->add_flag("--pullback", tr_pullback, "Resample exactly onto the pullback grid");

    // evolve
    auto* ev_cmd = app.add_subcommand("evolve", "Evolve an initial datum and write snapshots");
    std::string ev_config, ev_initial;
    ev_cmd->add_option("--config", ev_config, "Config file or preset")->required();
    ev_cmd->add_option("--initial", ev_initial, "Initial field file (overrides initial.*)")->check(CLI::ExistingFile);

    // barenblatt
    auto* bb_cmd = app.add_subcommand("barenblatt", "Build a Barenblatt profile by fixed-point iteration");
    std::string bb_config, bb_out, bb_report;
    bb_cmd->add_option("--config", bb_config, "Config file or preset")->required();
    bb_cmd->add_option("--out", bb_out, "Profile field file")->required();
    bb_cmd->add_option("--report", bb_report, "JSON report");

    // verify
    auto* vf_cmd = app.add_subcommand("verify", "Run verification suites on stored results");
    std::vector<std::string> vf_suites;
    std::string vf_traj, vf_profile, vf_config;
    vf_cmd->add_option("--suite", vf_suites, "mass, comparison, support, selfsim, harnack, degiorgi, cluster, oracle")
        ->required()
        ->delimiter(',');
    vf_cmd->add_option("--traj", vf_traj, "Trajectory directory")->check(CLI::ExistingDirectory);
    vf_cmd->add_option("--profile", vf_profile, "Profile field file (selfsim, oracle)")->check(CLI::ExistingFile);
    vf_cmd->add_option("--config", vf_config, "Config file or preset supplying suite parameters");

    // run
    auto* run_cmd = app.add_subcommand("run", "Run a preset or config file end to end");
    std::string run_spec;
    run_cmd->add_option("spec", run_spec, "Preset name or config path")->required();

    auto* list_cmd = app.add_subcommand("presets", "List or print shipped presets");
    std::string show_preset;
    list_cmd->add_option("name", show_preset, "Preset to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        set_thread_count(globals.threads);

        if (*exps_cmd) {
            const ExponentData e = n_opt ? derive_exponents(p_list, *n_opt) : derive_exponents(p_list);
            const json j = exponents_json(e);
            std::cout << j.dump(2) << "\n";
            return j["admissible"].get<bool>() ? 0 : 2;
        }
        if (*tr_cmd) {
            const FieldFile f = read_field(tr_in);
            const ExponentData e = derive_exponents(f.exponents);
            ScaleTransform t = ScaleTransform::mass_preserving(tr_rho, e);
            if (tr_theta) t.theta = *tr_theta;
            TransformOptions opts;
            opts.extension = tr_zero ? Extension::zero : Extension::none;
            opts.renormalize_mass = tr_renorm;
            const Grid target = tr_pullback ? pullback_grid(t, f.field.grid, e) : f.field.grid;
            write_field(tr_out, transform_field(t, f.field, target, e, opts), f.exponents);
            return 0;
        }
        if (*ev_cmd) {
            RunConfig cfg = load(ev_config, globals);
            const ExponentData e = derive_exponents(cfg.p);
            Field g;
            if (!ev_initial.empty()) {
                g = read_field(ev_initial).field;
                if (!(g.grid == cfg.grid)) throw std::invalid_argument("--initial: field grid differs from the config grid");
            } else {
                g = make_initial(cfg, e);
            }
            StagedDirectory stage(cfg.out_dir);
            write_trajectory(stage.path(), evolve(g, cfg.t0, cfg.t1, e, cfg.solver), cfg.p);
            stage.commit();
            std::cout << cfg.out_dir.string() << "\n";
            return 0;
        }
        if (*bb_cmd) {
            RunConfig cfg = load(bb_config, globals);
            const ExponentData e = derive_exponents(cfg.p);
            const BarenblattProfile prof = build_barenblatt(e, cfg.fixed_point, cfg.grid);
            write_field(bb_out, prof.w, cfg.p);
            if (!bb_report.empty()) write_text(bb_report, profile_json(prof).dump(2) + "\n");
            std::cout << profile_json(prof).dump(2) << "\n";
            return 0;
        }
        if (*vf_cmd) {
            RunConfig cfg;
            if (!vf_config.empty()) cfg = load(vf_config, globals);
            if (globals.seed) cfg.seed = *globals.seed;
            const std::filesystem::path out = globals.out_dir ? std::filesystem::path(*globals.out_dir) : cfg.out_dir;
            std::optional<TrajectoryFile> traj;
            std::optional<BarenblattProfile> prof;
            if (!vf_traj.empty()) traj = read_trajectory(vf_traj);
            if (!vf_profile.empty()) {
                FieldFile f = read_field(vf_profile);
                BarenblattProfile bp;
                bp.exps = derive_exponents(f.exponents);
                bp.w = std::move(f.field);
                bp.mass = mass(bp.w);
                bp.sup = sup_inf(bp.w).sup;
                prof = std::move(bp);
            }
            for (const auto& s : vf_suites) {
                SuiteReport r;
                if (s == "selfsim" || (s == "oracle" && prof)) {
                    if (!prof) throw std::invalid_argument("suite " + s + " needs --profile");
                    r = run_profile_suite(s, *prof, cfg);
                } else if (s == "comparison") {
                    if (cfg.p.empty()) throw std::invalid_argument("suite comparison needs --config");
                    r = run_trajectory_suite(s, Trajectory{}, derive_exponents(cfg.p), cfg);
                } else {
                    if (!traj) throw std::invalid_argument("suite " + s + " needs --traj");
                    if (cfg.p.empty()) cfg.p = traj->exponents;
                    r = run_trajectory_suite(s, traj->trajectory, derive_exponents(traj->exponents), cfg);
                }
                write_report(out, r);
                std::cout << s << ": " << (out / "reports" / (s + ".json")).string() << "\n";
            }
            return 0;
        }
        if (*run_cmd) {
            const RunConfig cfg = load(run_spec, globals);
            const ScenarioOutcome o = run_scenario(cfg);
            if (o.status != 0) {
                std::cerr << "error: " << o.error << "\n";
                std::cerr << "report: " << (cfg.out_dir / (cfg.name + ".error.json")).string() << "\n";
                return o.status;
            }
            std::cout << o.directory.string() << "\n";
            return 0;
        }
        if (*list_cmd) {
            if (show_preset.empty()) {
                for (const auto& n : preset_names()) std::cout << n << "\n";
            } else {
                std::cout << preset_text(show_preset);
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace apde::cli
