#include "apde_cli/scenario.hpp"

#include "apde/field_io.hpp"
#include "apde/harness.hpp"
#include "apde/parallel.hpp"
#include "apde/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

namespace apde::cli {
namespace {

using nlohmann::json;

std::string num(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string csv_row(std::initializer_list<double> values)
{
    std::string s;
    bool first = true;
    for (double v : values) {
        if (!first) s += ',';
        s += num(v);
        first = false;
    }
    return s + "\n";
}

double half_width_at(const Trajectory& traj, double t, std::size_t axis)
{
    double hw = traj.diagnostics.front().half_widths[axis];
    for (const auto& row : traj.diagnostics)
        if (row.t <= t) hw = row.half_widths[axis];
    return hw;
}

std::vector<double> probe_times(const Trajectory& traj, const RunConfig& cfg)
{
    if (!cfg.verify.probe_times.empty()) return cfg.verify.probe_times;
    return {std::sqrt(traj.snapshots.front().time * traj.snapshots.back().time)};
}

std::vector<ProbePoint> probe_points(const Trajectory& traj, const RunConfig& cfg)
{
    const std::size_t rank = traj.snapshots.front().grid.rank();
    std::vector<ProbePoint> probes;
    for (double t : probe_times(traj, cfg)) {
        const double hw = half_width_at(traj, t, 0);
        for (double f : cfg.verify.probe_fractions) {
            ProbePoint p;
            p.x.assign(rank, 0.0);
            p.x[0] = f * hw;
            p.t = t;
            probes.push_back(std::move(p));
        }
    }
    return probes;
}

SuiteReport suite_mass(const Trajectory& traj)
{
    SuiteReport r{"mass", json::object(), "t,mass,relative_drift\n"};
    const double m0 = traj.diagnostics.front().mass;
    double worst = 0.0;
    for (const auto& row : traj.diagnostics) {
        const double drift = m0 != 0.0 ? (row.mass - m0) / m0 : row.mass;
        worst = std::max(worst, std::abs(drift));
        r.csv += csv_row({row.t, row.mass, drift});
    }
    r.json["initial_mass"] = m0;
    r.json["final_mass"] = traj.diagnostics.back().mass;
    r.json["max_relative_drift"] = worst;
    return r;
}

SuiteReport suite_oracle(const Trajectory& traj, const ExponentData& e, const RunConfig& cfg)
{
    if (cfg.initial.kind != "barenblatt")
        throw std::invalid_argument("suite oracle: needs initial.kind = barenblatt (closed-form reference)");
    SuiteReport r{"oracle", json::object(), "t,relative_l1\n"};
    const IsotropicBarenblatt b(cfg.p.front(), e.n, cfg.initial.mass);
    json rows = json::array();
    double worst = 0.0;
    for (const auto& snap : traj.snapshots) {
        const Field exact = sample_field(b, snap.grid, snap.time);
        const double rel = l1_distance(snap, exact) / mass(exact);
        worst = std::max(worst, rel);
        rows.push_back({{"t", snap.time}, {"relative_l1", rel}});
        r.csv += csv_row({snap.time, rel});
    }
    r.json["mass"] = cfg.initial.mass;
    r.json["snapshots"] = rows;
    r.json["max_relative_l1"] = worst;
    return r;
}

SuiteReport suite_support(const Trajectory& traj, const ExponentData& e, const RunConfig& cfg)
{
    SuiteReport r{"support", json::object(), "t"};
    for (std::size_t a = 0; a < e.p.size(); ++a) r.csv += ",hw_" + std::to_string(a + 1);
    r.csv += "\n";
    for (const auto& row : traj.diagnostics) {
        r.csv += num(row.t);
        for (double h : row.half_widths) r.csv += "," + num(h);
        r.csv += "\n";
    }
    SupportGrowthOptions opts;
    opts.r0 = cfg.verify.support_r0;
    opts.time_origin = cfg.verify.support_origin;
    opts.late_fraction = cfg.verify.support_late_fraction;
    const SupportGrowthReport rep = check_support_growth(traj, e, opts);
    r.json["slopes"] = rep.slopes;
    r.json["alpha_i"] = rep.alpha_i;
    r.json["relative_errors"] = rep.relative_errors;
    r.json["strictly_decreasing"] = rep.strictly_decreasing;
    r.json["points_used"] = rep.points_used;
    r.json["r0"] = opts.r0;
    r.json["time_origin"] = opts.time_origin;
    return r;
}

json finite_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

SuiteReport suite_harnack(const Trajectory& traj, const ExponentData& e, const RunConfig& cfg)
{
    SuiteReport r{"harnack", json::object(), "c2,probe,t,x1,rho,forward,backward\n"};
    const auto probes = probe_points(traj, cfg);
    json sweeps = json::array();
    for (double c2 : cfg.verify.c2) {
        const HarnackReport rep = harnack_probe(traj, e, cfg.verify.c1, c2, cfg.verify.rho, probes);
        json ratios = json::array();
        for (std::size_t i = 0; i < probes.size(); ++i)
            for (std::size_t k = 0; k < rep.rho_grid.size(); ++k) {
                ratios.push_back({{"probe", i},
                                  {"rho", rep.rho_grid[k]},
                                  {"forward", finite_or_null(rep.ratios_fwd[i][k])},
                                  {"backward", finite_or_null(rep.ratios_bwd[i][k])}});
                r.csv += num(c2) + "," + std::to_string(i) + "," + num(probes[i].t) + "," + num(probes[i].x[0]) + "," +
                         num(rep.rho_grid[k]) + "," + num(rep.ratios_fwd[i][k]) + "," + num(rep.ratios_bwd[i][k]) + "\n";
            }
        json skipped = json::array();
        for (const auto& s : rep.skipped) skipped.push_back({{"probe", s.probe}, {"rho", s.rho}, {"reason", s.reason}});
        const auto [mn, mx] = std::minmax_element(rep.c3_per_rho.begin(), rep.c3_per_rho.end());
        bool all_finite = true;
        for (const auto& row : rep.ratios_fwd)
            for (double v : row)
                if (std::isinf(v)) all_finite = false;
        sweeps.push_back({{"C1", rep.C1},
                          {"C2", rep.C2},
                          {"empirical_C3", rep.empirical_C3},
                          {"c3_per_rho", rep.c3_per_rho},
                          {"c3_relative_spread", (*mx - *mn) / *mn},
                          {"all_retained_ratios_finite", all_finite},
                          {"retained", rep.retained},
                          {"ratios", ratios},
                          {"skipped", skipped}});
    }
    json pts = json::array();
    for (const auto& p : probes) pts.push_back({{"x", p.x}, {"t", p.t}});
    r.json["probe_points"] = pts;
    r.json["rho_grid"] = cfg.verify.rho;
    r.json["sweeps"] = sweeps;
    return r;
}

SuiteReport suite_degiorgi(const Trajectory& traj, const ExponentData& e, const RunConfig& cfg)
{
    SuiteReport r{"degiorgi", json::object(), "probe,rho,a,mu_observed,inf_half,implication_holds\n"};
    const auto probes = probe_points(traj, cfg);
    std::vector<DeGiorgiProbe> corpus;
    json rows = json::array();
    std::size_t skipped = 0;
    const DeGiorgiLattice lattice{cfg.verify.degiorgi_lattice, cfg.verify.degiorgi_lattice};
    for (std::size_t i = 0; i < probes.size(); ++i) {
        double u_star = 0.0;
        try {
            u_star = trajectory_value(traj, probes[i].x, probes[i].t);
        } catch (const CoverageError&) {
            ++skipped;
            continue;
        }
        if (!(u_star > 0.0)) {
            ++skipped;
            continue;
        }
        for (double rho : cfg.verify.rho) {
            const ScaleTransform window{rho, u_star / cfg.verify.c1};
            for (double a : cfg.verify.degiorgi_a) {
                try {
                    const DeGiorgiProbe p = degiorgi_probe(traj, e, probes[i].x, probes[i].t, window, a, lattice);
                    corpus.push_back(p);
                    rows.push_back({{"probe", i},
                                    {"rho", rho},
                                    {"a", a},
                                    {"mu_observed", p.mu_observed},
                                    {"inf_half", p.inf_half},
                                    {"implication_holds", p.implication_holds}});
                    r.csv += std::to_string(i) + "," + num(rho) + "," + num(a) + "," + num(p.mu_observed) + "," +
                             num(p.inf_half) + "," + (p.implication_holds ? "1" : "0") + "\n";
                } catch (const CoverageError&) {
                    ++skipped;
                }
            }
        }
    }
    const auto best = largest_mu_with_implication(corpus);
    r.json["windows"] = rows;
    r.json["skipped"] = skipped;
    r.json["largest_mu_with_implication"] = best ? json(*best) : json(nullptr);
    return r;
}

SuiteReport suite_cluster(const Trajectory& traj, const RunConfig& cfg)
{
    const double t_star = probe_times(traj, cfg).front();
    const Field* snap = &traj.snapshots.front();
    for (const auto& s : traj.snapshots)
        if (std::abs(s.time - t_star) < std::abs(snap->time - t_star)) snap = &s;
    const double sup = sup_inf(*snap).sup;
    const IndexBox box = nonzero_box(*snap, 1e-6 * sup);
    if (box.empty) throw std::invalid_argument("suite cluster: the selected snapshot vanishes");
    Grid g;
    for (std::size_t a = 0; a < snap->grid.rank(); ++a) {
        g.dims.push_back(box.hi[a] - box.lo[a] + 1);
        g.origin.push_back(snap->grid.origin[a] + static_cast<double>(box.lo[a]) * snap->grid.spacing[a]);
        g.spacing.push_back(snap->grid.spacing[a]);
    }
    Field slice = Field::zeros(g, snap->time);
    std::size_t k = 0;
    for_each_row(snap->grid, box, [&](std::size_t base, std::size_t b, std::size_t en) {
        for (std::size_t i = b; i < en; ++i) slice.values[k++] = snap->values[base + i] / sup;
    });
    const auto& v = cfg.verify;
    const ClusterResult res = cluster_search(slice, v.cluster_lambda, v.cluster_nu, v.cluster_alpha_bar, v.cluster_a,
                                             v.cluster_depth);
    SuiteReport r{"cluster", json::object(), ""};
    r.json["time"] = snap->time;
    r.json["normalised_by_sup"] = sup;
    r.json["level_fraction"] = res.level_fraction;
    r.json["hypothesis_holds"] = res.hypothesis_holds;
    if (res.cube) {
        // Independent recount over the cell centres inside the cube.
        const auto strides = g.strides();
        std::size_t inside = 0, hits = 0;
        for (std::size_t i = 0; i < slice.values.size(); ++i) {
            bool in = true;
            for (std::size_t a = 0; a < g.rank() && in; ++a) {
                const double x = g.center(a, (i / strides[a]) % g.dims[a]);
                const double lo = res.cube->center[a] - 0.5 * res.cube->edge[a];
                in = x >= lo && x < lo + res.cube->edge[a];
            }
            if (!in) continue;
            ++inside;
            if (slice.values[i] >= v.cluster_lambda * v.cluster_a) ++hits;
        }
        const double frac = inside ? static_cast<double>(hits) / static_cast<double>(inside) : 0.0;
        r.json["cube"] = {{"center", res.cube->center},
                          {"edge", res.cube->edge},
                          {"depth", res.cube->depth},
                          {"fraction", res.cube->fraction},
                          {"recount_fraction", frac},
                          {"recount_ok", frac == res.cube->fraction && frac > 1.0 - v.cluster_nu}};
    } else {
        r.json["cube"] = nullptr;
    }
    return r;
}

SuiteReport suite_comparison(const ExponentData& e, const RunConfig& cfg)
{
    SuiteReport r{"comparison", json::object(), "pair,violations,max_excess\n"};
    std::mt19937_64 rng(cfg.seed);
    const bool expl = cfg.solver.scheme == Scheme::explicit_flux;
    const double slack = expl ? 0.0 : 10.0 * cfg.solver.min_tol;
    std::size_t total = 0;
    double worst = 0.0;
    for (std::size_t k = 0; k < cfg.verify.comparison_pairs; ++k) {
        const Field lo = random_bump_field(cfg.grid, rng, 3, 0.2, 1.0);
        Field hi = random_bump_field(cfg.grid, rng, 1, 0.0, 0.5);
        for (std::size_t i = 0; i < hi.values.size(); ++i) hi.values[i] += lo.values[i];
        const ComparisonResult c = compare_ordered_pair(lo, hi, e, cfg.solver, cfg.verify.comparison_steps, slack);
        total += c.violations;
        worst = std::max(worst, c.max_excess);
        r.csv += std::to_string(k) + "," + std::to_string(c.violations) + "," + num(c.max_excess) + "\n";
    }
    r.json["scheme"] = expl ? "explicit" : "implicit";
    r.json["pairs"] = cfg.verify.comparison_pairs;
    r.json["steps"] = cfg.verify.comparison_steps;
    r.json["slack"] = slack;
    r.json["violations"] = total;
    r.json["max_excess"] = worst;
    return r;
}

} // namespace

SuiteReport run_trajectory_suite(const std::string& suite, const Trajectory& traj, const ExponentData& e,
                                 const RunConfig& cfg)
{
    if (suite == "mass") return suite_mass(traj);
    if (suite == "oracle") return suite_oracle(traj, e, cfg);
    if (suite == "support") return suite_support(traj, e, cfg);
    if (suite == "harnack") return suite_harnack(traj, e, cfg);
    if (suite == "degiorgi") return suite_degiorgi(traj, e, cfg);
    if (suite == "cluster") return suite_cluster(traj, cfg);
    if (suite == "comparison") return suite_comparison(e, cfg);
    throw std::invalid_argument("suite '" + suite + "' does not apply to a trajectory");
}

SuiteReport run_profile_suite(const std::string& suite, const BarenblattProfile& profile, const RunConfig& cfg)
{
    const ExponentData& e = profile.exps;
    if (suite == "selfsim") {
        SuiteReport r{"selfsim", json::object(), "rho,t,residual\n"};
        json rows = json::array();
        for (double rho : cfg.verify.selfsim_rho) {
            const double t = std::pow(rho, -0.5 * e.sigma);
            const double res = self_similarity_residual(profile, rho, t, profile.w.grid);
            rows.push_back({{"rho", rho}, {"t", t}, {"residual", res}});
            r.csv += csv_row({rho, t, res});
        }
        r.json["residuals"] = rows;
        return r;
    }
    if (suite == "oracle") {
        if (!std::all_of(e.p.begin(), e.p.end(), [&](double x) { return x == e.p.front(); }))
            throw std::invalid_argument("suite oracle: the closed form needs equal exponents");
        const IsotropicBarenblatt b(e.p.front(), e.n, profile.mass);
        const Field exact = sample_field(b, profile.w.grid, 1.0);
        SuiteReport r{"oracle", json::object(), ""};
        r.json["mass"] = profile.mass;
        r.json["relative_l1"] = l1_distance(profile.w, exact) / mass(exact);
        r.json["oracle_sup"] = sup_inf(exact).sup;
        r.json["profile_sup"] = profile.sup;
        return r;
    }
    if (suite == "comparison") return suite_comparison(e, cfg);
    throw std::invalid_argument("suite '" + suite + "' does not apply to a Barenblatt profile");
}

void write_report(const std::filesystem::path& dir, const SuiteReport& report)
{
    write_text(dir / "reports" / (report.suite + ".json"), report.json.dump(2) + "\n");
    if (!report.csv.empty()) write_text(dir / "reports" / (report.suite + ".csv"), report.csv);
}

nlohmann::json profile_json(const BarenblattProfile& p)
{
    json j;
    j["p"] = p.exps.p;
    j["mass"] = p.mass;
    j["sup"] = p.sup;
    j["eta_bar"] = p.eta_bar;
    j["eta_warning"] = p.eta_warning;
    j["iterations"] = p.iterations;
    j["restarts"] = p.restarts;
    j["residual"] = p.residual;
    j["residual_history"] = p.residual_history;
    j["support_lo"] = p.support.lo;
    j["support_hi"] = p.support.hi;
    return j;
}

ScenarioOutcome run_scenario(const RunConfig& cfg)
{
    ScenarioOutcome outcome;
    const auto started = std::chrono::steady_clock::now();
    const std::filesystem::path final_dir = cfg.out_dir / cfg.name;
    outcome.directory = final_dir;
    try {
        StagedDirectory stage(final_dir);
        const std::filesystem::path dir = stage.path();
        const ExponentData e = derive_exponents(cfg.p);
        write_text(dir / "config.cfg", cfg.source_text);

        if (cfg.mode == "evolve") {
            const Field g = make_initial(cfg, e);
            const Trajectory traj = evolve(g, cfg.t0, cfg.t1, e, cfg.solver);
            write_trajectory(dir / "trajectory", traj, cfg.p);
            for (const auto& s : cfg.verify.suites) write_report(dir, run_trajectory_suite(s, traj, e, cfg));
        } else {
            const BarenblattProfile prof = build_barenblatt(e, cfg.fixed_point, cfg.grid);
            write_field(dir / "profile.apde", prof.w, cfg.p);
            json j = profile_json(prof);
            std::vector<double> stability;
            Field w = prof.w;
            for (int k = 0; k < cfg.verify.stability_applications; ++k) {
                Field next = semigroup_tilde(w, cfg.fixed_point.s_bar, e, cfg.fixed_point.solver,
                                             cfg.fixed_point.renormalize_mass);
                stability.push_back(l1_distance(next, w) / mass(w));
                w = std::move(next);
            }
            j["stability_residuals"] = stability;
            write_text(dir / "barenblatt.json", j.dump(2) + "\n");
            for (const auto& s : cfg.verify.suites) write_report(dir, run_profile_suite(s, prof, cfg));
        }

        outcome.files = list_outputs(dir);
        json manifest;
        manifest["name"] = cfg.name;
        manifest["version"] = "0.1.0";
        manifest["config_fnv1a"] = hex64(fnv1a(cfg.source_text));
        manifest["seed"] = cfg.seed;
        manifest["threads"] = thread_count();
        manifest["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        json files = json::array();
        for (const auto& f : outcome.files) files.push_back({{"path", f.path}, {"bytes", f.bytes}, {"fnv1a", f.fnv1a}});
        manifest["files"] = files;
        write_text(dir / "manifest.json", manifest.dump(2) + "\n");
        stage.commit();
        std::filesystem::remove(cfg.out_dir / (cfg.name + ".error.json"));
    } catch (const std::exception& ex) {
        outcome.status = 1;
        outcome.error = ex.what();
        json err;
        err["name"] = cfg.name;
        err["error"] = ex.what();
        if (const auto* bc = dynamic_cast<const BoundaryContactError*>(&ex)) {
            err["kind"] = "boundary_contact";
            err["time"] = bc->time();
        } else if (const auto* fp = dynamic_cast<const FixedPointError*>(&ex)) {
            err["kind"] = "fixed_point";
            err["residual_history"] = fp->residual_history();
        } else {
            err["kind"] = "error";
        }
        try {
            write_text(cfg.out_dir / (cfg.name + ".error.json"), err.dump(2) + "\n");
        } catch (const std::exception&) {
        }
    }
    return outcome;
}

} // namespace apde::cli
