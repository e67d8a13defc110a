#include "apde/fokker_planck.hpp"

#include "apde/geometry.hpp"
#include "apde/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace apde {
namespace {

// One zero cell on every side, so zero extension is always admissible.
Field pad_one(const Field& u)
{
    const std::vector<std::size_t> one(u.grid.rank(), 1);
    return pad_zero(u, one, one);
}

Field initial_indicator(const Grid& g, double eps0)
{
    Field u = Field::zeros(g, 1.0);
    const std::size_t rank = g.rank();
    const auto strides = g.strides();
    std::size_t inside = 0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        double r2 = 0.0;
        for (std::size_t a = 0; a < rank; ++a) {
            const double x = g.center(a, (i / strides[a]) % g.dims[a]);
            r2 += x * x;
        }
        if (r2 < 1.0) {
            u.values[i] = 1.0;
            ++inside;
        }
    }
    if (inside == 0) throw std::invalid_argument("build_barenblatt: the grid has no cell centre inside the unit ball");
    // Discrete mass exactly eps0; the amplitude approximates eps0 / |B_1|.
    const double level = eps0 / (static_cast<double>(inside) * g.cell_volume());
    for (double& v : u.values) v *= level;
    return u;
}

void scale_to_mass(Field& u, double target)
{
    const double have = mass(u);
    if (have <= 0.0) return;
    const double k = target / have;
    for (double& v : u.values) v *= k;
}

} // namespace

double l1_distance(const Field& a, const Field& b)
{
    if (!(a.grid == b.grid)) throw std::invalid_argument("l1_distance: grids differ");
    return tree_sum_map(a.values.size(), [&](std::size_t i) { return std::abs(a.values[i] - b.values[i]); }) *
           a.grid.cell_volume();
}

Field semigroup_tilde(const Field& g, double s, const ExponentData& e, const SolverConfig& cfg, bool renormalize_mass)
{
    if (!(s >= 0.0)) throw std::invalid_argument("semigroup_tilde: s must be nonnegative");
    validate(g);
    const double t1 = std::exp(s);
    Field evolved = s > 0.0 ? evolve_to(g, 1.0, t1, e, cfg) : g;
    evolved.time = t1;
    const ScaleTransform t = ScaleTransform::mass_preserving(std::exp(s / e.sigma), e);
    TransformOptions opts;
    opts.extension = Extension::zero;
    opts.renormalize_mass = renormalize_mass;
    Field out = transform_field(t, pad_one(evolved), g.grid, e, opts);
    out.time = 0.0;
    return out;
}

void validate(const FixedPointConfig& cfg)
{
    if (!(cfg.eps0 > 0.0)) throw std::invalid_argument("fixed_point.eps0 must be positive");
    if (!(cfg.s_bar > 0.0)) throw std::invalid_argument("fixed_point.s_bar must be positive");
    if (!(cfg.tol > 0.0)) throw std::invalid_argument("fixed_point.tol must be positive");
    if (cfg.max_iters < 1) throw std::invalid_argument("fixed_point.max_iters must be at least 1");
    if (cfg.stall_window < 1) throw std::invalid_argument("fixed_point.stall_window must be at least 1");
    validate(cfg.solver);
}

BarenblattProfile build_barenblatt(const ExponentData& e, const FixedPointConfig& cfg, const Grid& grid)
{
    validate(cfg);
    validate(grid);
    const AdmissibilityReport adm = validate_admissible(e);
    if (!adm.ok) throw std::invalid_argument("build_barenblatt: exponents are not admissible: " + adm.violations.front());
    if (grid.rank() != static_cast<std::size_t>(e.n)) throw std::invalid_argument("build_barenblatt: grid rank differs from N");
    for (std::size_t a = 0; a < grid.rank(); ++a)
        if (grid.lower(a) > -2.0 || grid.upper(a) < 2.0)
            throw std::invalid_argument("build_barenblatt: the grid must cover [-2, 2]^N");

    Field g = initial_indicator(grid, cfg.eps0);
    if (sup_inf(g).sup > 1.0)
        throw std::invalid_argument("build_barenblatt: eps0 / |B_1| exceeds 1; the initial datum leaves X_{1,1}");
    const double target_mass = mass(g);

    BarenblattProfile out;
    out.exps = e;
    Field running_sup = g;
    std::size_t last_restart = 0;

    for (int it = 0; it < cfg.max_iters; ++it) {
        Field next = semigroup_tilde(g, cfg.s_bar, e, cfg.solver, cfg.renormalize_mass);
        const double m = mass(g);
        const double next_mass = mass(next);
        if (!(next_mass > 0.0) || !std::isfinite(next_mass) || !(m > 0.0))
            throw FixedPointError("build_barenblatt: the iterate collapsed to zero mass; increase eps0 or refine the grid",
                                  out.residual_history);
        const double residual = l1_distance(next, g) / m;
        out.residual_history.push_back(residual);
        if (residual <= cfg.tol) {
            out.w = std::move(g);
            out.residual = residual;
            out.iterations = it + 1;
            break;
        }
        for (std::size_t i = 0; i < next.values.size(); ++i)
            running_sup.values[i] = std::max(running_sup.values[i], next.values[i]);

        const std::size_t k = out.residual_history.size() - 1;
        const auto window = static_cast<std::size_t>(cfg.stall_window);
        const bool stalled = k >= last_restart + window &&
                             residual >= 0.99 * out.residual_history[k - window];
        if (cfg.use_running_sup && stalled) {
            g = running_sup;
            scale_to_mass(g, target_mass);
            running_sup = g;
            last_restart = k + 1;
            ++out.restarts;
        } else {
            g = std::move(next);
        }
    }
    if (out.iterations == 0) {
        std::ostringstream os;
        os.precision(6);
        os << "build_barenblatt: no fixed point within " << cfg.max_iters << " iterations (last residual "
           << out.residual_history.back() << ")";
        throw FixedPointError(os.str(), out.residual_history);
    }

    out.mass = mass(out.w);
    out.sup = sup_inf(out.w).sup;
    out.support = support_box(out.w, cfg.solver.support_threshold * out.sup);
    const EtaEstimate eta = estimate_eta(out.w);
    out.eta_bar = eta.eta;
    out.eta_warning = eta.warning;
    return out;
}

double eval_barenblatt(const BarenblattProfile& profile, double lambda, std::span<const double> x, double t)
{
    if (!(t > 0.0)) throw std::invalid_argument("eval_barenblatt: t must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("eval_barenblatt: lambda must be positive");
    const Grid& g = profile.w.grid;
    const ExponentData& e = profile.exps;
    std::vector<double> y(g.rank());
    for (std::size_t a = 0; a < g.rank(); ++a) {
        y[a] = std::pow(lambda, (2.0 - e.p[a]) / e.p[a]) * x[a] * std::pow(t, -e.alpha_i[a]);
        if (y[a] < g.center(a, 0) || y[a] > g.center(a, g.dims[a] - 1)) return 0.0;
    }
    return lambda * std::pow(t, -e.alpha) * interpolate(profile.w, y);
}

Field sample_barenblatt(const BarenblattProfile& profile, double lambda, double t, const Grid& g)
{
    validate(g);
    Field u = Field::zeros(g, t);
    const auto strides = g.strides();
    std::vector<double> x(g.rank());
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        for (std::size_t a = 0; a < g.rank(); ++a) x[a] = g.center(a, (i / strides[a]) % g.dims[a]);
        u.values[i] = eval_barenblatt(profile, lambda, x, t);
    }
    return u;
}

EtaEstimate estimate_eta(const Field& w)
{
    validate(w);
    const Grid& g = w.grid;
    const std::size_t rank = g.rank();
    double eta_max = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < rank; ++a) {
        const double lo = g.center(a, 0);
        const double hi = g.center(a, g.dims[a] - 1);
        if (!(lo < 0.0 && hi > 0.0)) return {0.0, "the origin is outside the cell-centre hull"};
        eta_max = std::min({eta_max, -lo, hi});
    }
    const double sup = sup_inf(w).sup;
    eta_max = std::min(eta_max, sup);

    auto min_on = [&](double eta) {
        const std::vector<double> lo(rank, -eta), hi(rank, eta);
        return interpolant_extrema(w, nullptr, 0.0, lo, hi).inf;
    };
    const std::vector<double> origin(rank, 0.0);
    if (!(eta_max > 0.0) || !(interpolate(w, origin) > 0.0))
        return {0.0, "w does not resolve a positive neighbourhood of the origin"};

    double lo = 0.0;
    double hi = eta_max;
    if (min_on(hi) >= hi) return {hi, ""};
    for (int k = 0; k < 200 && hi - lo > 1e-15 * eta_max; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (min_on(mid) >= mid)
            lo = mid;
        else
            hi = mid;
    }
    if (lo == 0.0) return {0.0, "w does not resolve a positive neighbourhood of the origin"};
    return {lo, ""};
}

double self_similarity_residual(const BarenblattProfile& profile, double rho, double t, const Grid& g)
{
    if (!(rho > 0.0) || !(t > 0.0)) throw std::invalid_argument("self_similarity_residual: rho and t must be positive");
    const ExponentData& e = profile.exps;
    const Field direct = sample_barenblatt(profile, 1.0, t, g);
    const double norm = tree_sum_map(direct.values.size(), [&](std::size_t i) { return std::abs(direct.values[i]); }) *
                        g.cell_volume();
    if (!(norm > 0.0)) throw std::invalid_argument("self_similarity_residual: B vanishes on the grid");
    const ScaleTransform tr = ScaleTransform::mass_preserving(rho, e);
    const double later = t * scale_factors(tr, e).time;
    const Field source = sample_barenblatt(profile, 1.0, later, g);
    TransformOptions opts;
    opts.extension = Extension::zero;
    const Field mapped = transform_field(tr, pad_one(source), g, e, opts);
    return l1_distance(mapped, direct) / norm;
}

} // namespace apde
