#include "apde/harness.hpp"

#include "apde/parallel.hpp"
#include "apde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace apde {

IsotropicBarenblatt::IsotropicBarenblatt(double p_, int n_, double mass_) : p(p_), n(n_), mass(mass_)
{
    if (!(p > 2.0)) throw std::invalid_argument("isotropic Barenblatt requires p > 2");
    if (n < 1) throw std::invalid_argument("isotropic Barenblatt requires N >= 1");
    if (!(mass > 0.0)) throw std::invalid_argument("isotropic Barenblatt requires a positive mass");
    const double nd = n;
    alpha = nd / (nd * (p - 2.0) + p);
    k = ((p - 2.0) / p) * std::pow(alpha / nd, 1.0 / (p - 1.0));
    const double q = p / (p - 1.0);
    const double m = (p - 1.0) / (p - 2.0);
    const double integral = std::pow(2.0 * std::tgamma(1.0 + 1.0 / q), nd) * std::tgamma(m + 1.0) /
                            std::tgamma(nd / q + m + 1.0);
    c = std::pow(mass * std::pow(k, nd / q) / integral, 1.0 / (m + nd / q));
}

double IsotropicBarenblatt::operator()(std::span<const double> x, double t) const
{
    if (!(t > 0.0)) throw std::invalid_argument("isotropic Barenblatt requires t > 0");
    const double q = p / (p - 1.0);
    const double scale = std::pow(t, -alpha / n);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::pow(std::abs(x[i]) * scale, q);
    const double base = c - k * s;
    if (base <= 0.0) return 0.0;
    return std::pow(t, -alpha) * std::pow(base, (p - 1.0) / (p - 2.0));
}

double IsotropicBarenblatt::support_radius(double t) const
{
    return std::pow(c / k, (p - 1.0) / p) * std::pow(t, alpha / n);
}

double isotropic_barenblatt(std::span<const double> x, double t, double p, int n, double mass)
{
    if (!(t > 0.0)) throw std::invalid_argument("isotropic_barenblatt: t must be positive");
    if (!(p > 2.0)) throw std::invalid_argument("isotropic_barenblatt: p must exceed 2");
    return IsotropicBarenblatt(p, n, mass)(x, t);
}

double pde_residual(const std::function<double(std::span<const double>, double)>& u, std::span<const double> x, double t,
                    double p, double h)
{
    const std::size_t n = x.size();
    auto phi = [p](double d) { return d == 0.0 ? 0.0 : d * std::pow(std::abs(d), p - 2.0); };
    const double u0 = u(x, t);
    const double ut = (u(x, t + h) - u(x, t - h)) / (2.0 * h);
    std::vector<double> y(x.begin(), x.end());
    double div = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = x[i] + h;
        const double up = u(y, t);
        y[i] = x[i] - h;
        const double down = u(y, t);
        y[i] = x[i];
        div += (phi((up - u0) / h) - phi((u0 - down) / h)) / h;
    }
    const double scale = std::abs(ut) > 0.0 ? std::abs(ut) : 1.0;
    return std::abs(ut - div) / scale;
}

Field sample_field(const IsotropicBarenblatt& b, const Grid& g, double t)
{
    validate(g);
    Field u = Field::zeros(g, t);
    const auto strides = g.strides();
    const std::size_t rank = g.rank();
    if (rank != static_cast<std::size_t>(b.n)) throw std::invalid_argument("sample_field: grid rank differs from N");
    parallel_for(u.values.size(), [&](std::size_t lo, std::size_t hi) {
        std::vector<double> x(rank);
        for (std::size_t i = lo; i < hi; ++i) {
            for (std::size_t a = 0; a < rank; ++a) x[a] = g.center(a, (i / strides[a]) % g.dims[a]);
            u.values[i] = b(x, t);
        }
    });
    return u;
}

Trajectory oracle_trajectory(const IsotropicBarenblatt& b, const Grid& g, std::span<const double> times,
                             const ExponentData& e, double support_threshold)
{
    Trajectory traj;
    for (double t : times) {
        traj.snapshots.push_back(sample_field(b, g, t));
        traj.diagnostics.push_back(diagnose(traj.snapshots.back(), e, support_threshold));
    }
    traj.check();
    return traj;
}

SupportGrowthReport check_support_growth(const Trajectory& traj, const ExponentData& e, const SupportGrowthOptions& opts)
{
    traj.check();
    const std::size_t rank = e.p.size();
    const auto& rows = traj.diagnostics;
    if (rows.size() < 10) throw std::invalid_argument("check_support_growth: needs at least 10 snapshots");
    std::vector<double> r0 = opts.r0.empty() ? std::vector<double>(rank, 0.0) : opts.r0;
    if (r0.size() != rank) throw std::invalid_argument("check_support_growth: r0 has the wrong length");
    if (!(opts.late_fraction > 0.0 && opts.late_fraction <= 1.0))
        throw std::invalid_argument("check_support_growth: late_fraction must lie in (0, 1]");
    const double first = rows.front().t - opts.time_origin;
    const double last = rows.back().t - opts.time_origin;
    if (!(first > 0.0) || last < 10.0 * first * (1.0 - 1e-12))
        throw std::invalid_argument("check_support_growth: snapshots must span a decade of t - origin");

    const double log_cut = std::log(last) - opts.late_fraction * (std::log(last) - std::log(first));
    SupportGrowthReport rep;
    rep.alpha_i = e.alpha_i;
    for (std::size_t a = 0; a < rank; ++a) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        std::size_t count = 0;
        for (const auto& row : rows) {
            const double lt = std::log(row.t - opts.time_origin);
            if (lt < log_cut - 1e-12) continue;
            const double grow = row.half_widths[a] - r0[a];
            if (!(grow > 0.0)) continue;
            const double ly = std::log(grow);
            sx += lt;
            sy += ly;
            sxx += lt * lt;
            sxy += lt * ly;
            ++count;
        }
        const double nd = static_cast<double>(count);
        const double den = nd * sxx - sx * sx;
        if (count < 2 || !(den > 0.0)) {
            std::ostringstream os;
            os << "check_support_growth: the support does not grow along axis " << a + 1;
            throw DegenerateFitError(os.str());
        }
        const double slope = (nd * sxy - sx * sy) / den;
        rep.slopes.push_back(slope);
        rep.relative_errors.push_back((slope - e.alpha_i[a]) / e.alpha_i[a]);
        rep.points_used = a == 0 ? count : std::min(rep.points_used, count);
    }
    rep.strictly_decreasing = true;
    for (std::size_t a = 1; a < rank; ++a)
        if (!(rep.slopes[a - 1] > rep.slopes[a])) rep.strictly_decreasing = false;
    return rep;
}

Trajectory transform_trajectory(const Trajectory& traj, const ScaleTransform& t, const ExponentData& e)
{
    traj.check();
    const ScaleFactors f = scale_factors(t, e);
    Trajectory out;
    for (const auto& snap : traj.snapshots) {
        Field v;
        v.grid = pullback_grid(t, snap.grid, e);
        v.values = snap.values;
        for (double& x : v.values) x /= t.theta;
        v.time = snap.time / f.time;
        out.diagnostics.push_back(diagnose(v, e, 1e-6));
        out.snapshots.push_back(std::move(v));
    }
    return out;
}

namespace {

struct TimeBracket {
    const Field* a = nullptr;
    const Field* b = nullptr;
    double w = 0.0;
};

TimeBracket bracket(const Trajectory& traj, double t)
{
    const auto& s = traj.snapshots;
    if (s.empty()) throw CoverageError("empty trajectory");
    if (t < s.front().time || t > s.back().time) {
        std::ostringstream os;
        os.precision(10);
        os << "time " << t << " is outside the trajectory window [" << s.front().time << ", " << s.back().time << "]";
        throw CoverageError(os.str());
    }
    auto it = std::upper_bound(s.begin(), s.end(), t, [](double v, const Field& f) { return v < f.time; });
    if (it == s.begin()) return {&s.front(), nullptr, 0.0};
    const Field* lo = &*(it - 1);
    if (lo->time == t || it == s.end()) return {lo, nullptr, 0.0};
    const Field* hi = &*it;
    return {lo, hi, (t - lo->time) / (hi->time - lo->time)};
}

bool inside_hull(const Grid& g, std::span<const double> lo, std::span<const double> hi)
{
    for (std::size_t a = 0; a < g.rank(); ++a)
        if (lo[a] < g.center(a, 0) || hi[a] > g.center(a, g.dims[a] - 1)) return false;
    return true;
}

} // namespace

double trajectory_value(const Trajectory& traj, std::span<const double> x, double t)
{
    const TimeBracket br = bracket(traj, t);
    double v = interpolate(*br.a, x);
    if (br.b && br.w != 0.0) v = (1.0 - br.w) * v + br.w * interpolate(*br.b, x);
    return v;
}

Extrema trajectory_extrema(const Trajectory& traj, std::span<const double> lo, std::span<const double> hi, double t)
{
    const TimeBracket br = bracket(traj, t);
    return interpolant_extrema(*br.a, br.b, br.b ? br.w : 0.0, lo, hi);
}

HarnackReport harnack_probe(const Trajectory& traj, const ExponentData& e, double C1, double C2,
                            std::span<const double> rho_grid, std::span<const ProbePoint> probes)
{
    traj.check();
    if (!(C1 > 0.0) || !(C2 > 0.0)) throw std::invalid_argument("harnack_probe: C1 and C2 must be positive");
    if (rho_grid.empty() || probes.empty()) throw std::invalid_argument("harnack_probe: empty probe or radius list");
    const std::size_t rank = e.p.size();
    const Grid& g = traj.snapshots.front().grid;
    const double t_first = traj.snapshots.front().time;
    const double t_last = traj.snapshots.back().time;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    HarnackReport rep;
    rep.probe_points.assign(probes.begin(), probes.end());
    rep.C1 = C1;
    rep.C2 = C2;
    rep.rho_grid.assign(rho_grid.begin(), rho_grid.end());
    rep.ratios_fwd.assign(probes.size(), std::vector<double>(rho_grid.size(), nan));
    rep.ratios_bwd = rep.ratios_fwd;
    rep.c3_per_rho.assign(rho_grid.size(), 1.0);

    for (std::size_t pi = 0; pi < probes.size(); ++pi) {
        const ProbePoint& pr = probes[pi];
        if (pr.x.size() != rank) throw std::invalid_argument("harnack_probe: probe point has the wrong rank");
        double u_star = 0.0;
        bool inside = true;
        try {
            u_star = trajectory_value(traj, pr.x, pr.t);
        } catch (const CoverageError&) {
            inside = false;
        }
        for (std::size_t ri = 0; ri < rho_grid.size(); ++ri) {
            if (!inside) {
                rep.skipped.push_back({pi, ri, "probe point outside the data window"});
                continue;
            }
            if (!(u_star > 0.0)) {
                rep.skipped.push_back({pi, ri, "u vanishes at the probe point"});
                continue;
            }
            const double rho = rho_grid[ri];
            const double M = u_star / C1;
            const double tau = std::pow(M, 2.0 - e.p_bar) * std::pow(C2 * rho, e.p_bar);
            std::vector<double> lo(rank), hi(rank), wlo(rank), whi(rank);
            for (std::size_t a = 0; a < rank; ++a) {
                const double shape = std::pow(M, (e.p[a] - e.p_bar) / e.p[a]);
                const double half = 0.5 * shape * std::pow(rho, e.p_bar / e.p[a]);
                const double window = 0.5 * shape * std::pow(C2 * rho, e.p_bar / e.p[a]);
                lo[a] = pr.x[a] - half;
                hi[a] = pr.x[a] + half;
                wlo[a] = pr.x[a] - std::max(half, window);
                whi[a] = pr.x[a] + std::max(half, window);
            }
            if (!inside_hull(g, wlo, whi)) {
                rep.skipped.push_back({pi, ri, "intrinsic cube leaves the spatial window"});
                continue;
            }
            if (pr.t - tau < t_first || pr.t + tau > t_last) {
                rep.skipped.push_back({pi, ri, "waiting time leaves the time window"});
                continue;
            }
            const double inf_fwd = trajectory_extrema(traj, lo, hi, pr.t + tau).inf;
            const double sup_bwd = trajectory_extrema(traj, lo, hi, pr.t - tau).sup;
            const double fwd = inf_fwd > 0.0 ? u_star / inf_fwd : std::numeric_limits<double>::infinity();
            const double bwd = std::max(sup_bwd, 0.0) / u_star;
            rep.ratios_fwd[pi][ri] = fwd;
            rep.ratios_bwd[pi][ri] = bwd;
            ++rep.retained;
            for (double r : {fwd, bwd}) {
                if (std::isfinite(r)) {
                    rep.c3_per_rho[ri] = std::max(rep.c3_per_rho[ri], r);
                    rep.empirical_C3 = std::max(rep.empirical_C3, r);
                }
            }
        }
    }
    if (rep.retained == 0) throw std::invalid_argument("harnack_probe: no probe was retained");
    return rep;
}

namespace {

// Odometer over a space-time lattice of a box (half-width r/2 per axis, times (-r^2, 0]).
template <class Visit>
void lattice_walk(std::size_t rank, const DeGiorgiLattice& lat, double r, Visit&& visit)
{
    std::vector<std::size_t> idx(rank, 0);
    std::vector<double> y(rank);
    const double ns = static_cast<double>(lat.space);
    const double nt = static_cast<double>(lat.time);
    for (std::size_t j = 0; j < lat.time; ++j) {
        const double s = -r * r + r * r * (static_cast<double>(j) + 1.0) / nt;
        std::fill(idx.begin(), idx.end(), 0);
        for (;;) {
            for (std::size_t a = 0; a < rank; ++a) y[a] = r * (-0.5 + (static_cast<double>(idx[a]) + 0.5) / ns);
            visit(std::span<const double>(y), s);
            std::size_t a = rank;
            bool done = true;
            while (a-- > 0) {
                if (++idx[a] < lat.space) {
                    done = false;
                    break;
                }
                idx[a] = 0;
            }
            if (done) break;
        }
    }
}

DeGiorgiProbe probe_impl(const std::function<double(std::span<const double>, double)>& v, std::size_t rank, double a,
                         const DeGiorgiLattice& lat)
{
    if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("degiorgi_probe: a must lie in (0, 1]");
    if (lat.space == 0 || lat.time == 0) throw std::invalid_argument("degiorgi_probe: empty lattice");
    DeGiorgiProbe out;
    out.a = a;
    std::size_t total = 0, low = 0;
    lattice_walk(rank, lat, 1.0, [&](std::span<const double> y, double s) {
        ++total;
        if (v(y, s) <= a) ++low;
    });
    double inf_half = std::numeric_limits<double>::infinity();
    lattice_walk(rank, lat, 0.5, [&](std::span<const double> y, double s) { inf_half = std::min(inf_half, v(y, s)); });
    out.mu_observed = static_cast<double>(low) / static_cast<double>(total);
    out.inf_half = inf_half;
    out.implication_holds = inf_half >= 0.5 * a;
    return out;
}

} // namespace

DeGiorgiProbe degiorgi_probe(const std::function<double(std::span<const double>, double)>& v, std::size_t rank,
                             double a, const DeGiorgiLattice& lattice)
{
    if (rank == 0) throw std::invalid_argument("degiorgi_probe: rank must be positive");
    return probe_impl(v, rank, a, lattice);
}

DeGiorgiProbe degiorgi_probe(const Trajectory& traj, const ExponentData& e, std::span<const double> x0, double t0,
                             const ScaleTransform& window, double a, const DeGiorgiLattice& lattice)
{
    traj.check();
    const std::size_t rank = e.p.size();
    const ScaleFactors f = scale_factors(window, e);
    std::vector<double> x(rank);
    auto v = [&](std::span<const double> y, double s) {
        for (std::size_t i = 0; i < rank; ++i) x[i] = x0[i] + f.space[i] * y[i];
        return trajectory_value(traj, x, t0 + f.time * s) / window.theta;
    };
    return probe_impl(v, rank, a, lattice);
}

std::optional<double> largest_mu_with_implication(std::span<const DeGiorgiProbe> corpus)
{
    std::optional<double> best;
    for (const auto& p : corpus)
        if (p.implication_holds && (!best || p.mu_observed > *best)) best = p.mu_observed;
    return best;
}

ClusterResult cluster_search(const Field& u, double lambda, double nu, double alpha_bar, double a, int max_depth)
{
    validate(u);
    if (!(lambda > 0.0) || !(nu > 0.0 && nu < 1.0) || !(a > 0.0))
        throw std::invalid_argument("cluster_search: requires lambda > 0, nu in (0, 1), a > 0");
    if (max_depth < 0) throw std::invalid_argument("cluster_search: max_depth must be nonnegative");
    const Grid& g = u.grid;
    const std::size_t rank = g.rank();
    const double level = lambda * a;

    ClusterResult res;
    std::size_t above_a = 0;
    for (double v : u.values)
        if (v >= a) ++above_a;
    res.level_fraction = static_cast<double>(above_a) / static_cast<double>(u.values.size());
    res.hypothesis_holds = res.level_fraction >= alpha_bar;

    for (int depth = 0; depth <= max_depth; ++depth) {
        const std::size_t parts = std::size_t{1} << depth;
        std::vector<double> edge(rank);
        for (std::size_t ax = 0; ax < rank; ++ax) edge[ax] = (g.upper(ax) - g.lower(ax)) / static_cast<double>(parts);
        std::optional<ClusterCube> best;
        std::vector<std::size_t> cube(rank, 0);
        for (;;) {
            // Cell index range whose centres fall inside this subcube (half-open).
            IndexBox box;
            box.empty = false;
            for (std::size_t ax = 0; ax < rank; ++ax) {
                const double lo = g.lower(ax) + static_cast<double>(cube[ax]) * edge[ax];
                const double hi = lo + edge[ax];
                const double h = g.spacing[ax];
                const double k_lo = std::ceil((lo - g.origin[ax]) / h - 0.5);
                const double k_hi = std::ceil((hi - g.origin[ax]) / h - 0.5) - 1.0;
                if (k_hi < k_lo) {
                    box.empty = true;
                    break;
                }
                box.lo.push_back(static_cast<std::size_t>(std::max(0.0, k_lo)));
                box.hi.push_back(static_cast<std::size_t>(std::min(k_hi, static_cast<double>(g.dims[ax] - 1))));
            }
            if (!box.empty) {
                std::size_t hits = 0;
                for_each_row(g, box, [&](std::size_t base, std::size_t b, std::size_t e) {
                    for (std::size_t k = b; k < e; ++k)
                        if (u.values[base + k] >= level) ++hits;
                });
                const double frac = static_cast<double>(hits) / static_cast<double>(box.count());
                if (frac > 1.0 - nu && (!best || frac > best->fraction)) {
                    ClusterCube c;
                    c.edge = edge;
                    c.depth = depth;
                    c.fraction = frac;
                    for (std::size_t ax = 0; ax < rank; ++ax)
                        c.center.push_back(g.lower(ax) + (static_cast<double>(cube[ax]) + 0.5) * edge[ax]);
                    best = std::move(c);
                }
            }
            std::size_t ax = rank;
            bool done = true;
            while (ax-- > 0) {
                if (++cube[ax] < parts) {
                    done = false;
                    break;
                }
                cube[ax] = 0;
            }
            if (done) break;
        }
        if (best) {
            res.cube = std::move(best);
            return res;
        }
    }
    return res;
}

namespace {

double unit_draw(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

Field random_bump_field(const Grid& g, std::mt19937_64& rng, int bumps, double amp_lo, double amp_hi)
{
    validate(g);
    const std::size_t rank = g.rank();
    Field u = Field::zeros(g, 0.0);
    double extent = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < rank; ++a) extent = std::min(extent, g.upper(a) - g.lower(a));
    const auto strides = g.strides();
    std::vector<double> c(rank);
    for (int b = 0; b < bumps; ++b) {
        for (std::size_t a = 0; a < rank; ++a) {
            const double mid = 0.5 * (g.lower(a) + g.upper(a));
            const double span = g.upper(a) - g.lower(a);
            c[a] = mid + (unit_draw(rng) - 0.5) * 0.5 * span;
        }
        const double r = extent * (0.05 + 0.1 * unit_draw(rng));
        const double amp = amp_lo + (amp_hi - amp_lo) * unit_draw(rng);
        for (std::size_t i = 0; i < u.values.size(); ++i) {
            double r2 = 0.0;
            for (std::size_t a = 0; a < rank; ++a) {
                const double d = g.center(a, (i / strides[a]) % g.dims[a]) - c[a];
                r2 += d * d;
            }
            const double s = 1.0 - r2 / (r * r);
            if (s > 0.0) u.values[i] += amp * s * s;
        }
    }
    return u;
}

ComparisonResult compare_ordered_pair(const Field& g_lo, const Field& g_hi, const ExponentData& e,
                                      const SolverConfig& cfg, std::size_t steps, double slack)
{
    if (!(g_lo.grid == g_hi.grid)) throw std::invalid_argument("compare_ordered_pair: grids differ");
    validate(cfg);
    ComparisonResult res;
    Field lo = g_lo;
    Field hi = g_hi;
    auto tally = [&] {
        for (std::size_t i = 0; i < lo.values.size(); ++i) {
            const double excess = lo.values[i] - hi.values[i];
            if (excess > 0.0) res.max_excess = std::max(res.max_excess, excess);
            if (excess > slack) ++res.violations;
        }
    };
    for (std::size_t k = 0; k < steps; ++k) {
        if (cfg.scheme == Scheme::explicit_flux) {
            const ExplicitEvaluation ev_lo = evaluate_explicit(lo, e, cfg.cfl_safety);
            const ExplicitEvaluation ev_hi = evaluate_explicit(hi, e, cfg.cfl_safety);
            const double dt = std::min(ev_lo.dt, ev_hi.dt);
            if (!std::isfinite(dt)) break;
            for (std::size_t i = 0; i < lo.values.size(); ++i) {
                lo.values[i] += dt * ev_lo.divergence.values[i];
                hi.values[i] += dt * ev_hi.divergence.values[i];
            }
            lo.time += dt;
            hi.time += dt;
        } else {
            lo = step_implicit(lo, cfg.implicit_dt, e, cfg);
            hi = step_implicit(hi, cfg.implicit_dt, e, cfg);
        }
        ++res.steps;
        tally();
    }
    return res;
}

} // namespace apde
