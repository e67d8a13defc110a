#include "apde/solver.hpp"

#include "apde/parallel.hpp"
#include "apde/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace apde {
namespace {

// phi_p(d) = |d|^{p-2} d with exact fast paths for common exponents.
struct PowerLaw {
    enum class Kind { general, two, two_and_half, three, four };

    explicit PowerLaw(double exponent) : p(exponent), pm2(exponent - 2.0), inv_p(1.0 / exponent)
    {
        if (p == 2.0)
            kind = Kind::two;
        else if (p == 2.5)
            kind = Kind::two_and_half;
        else if (p == 3.0)
            kind = Kind::three;
        else if (p == 4.0)
            kind = Kind::four;
    }

    double flux(double d) const
    {
        switch (kind) {
        case Kind::two: return d;
        case Kind::two_and_half: return d * std::sqrt(std::abs(d));
        case Kind::three: return d * std::abs(d);
        case Kind::four: return d * d * d;
        case Kind::general: break;
        }
        const double a = std::abs(d);
        return a == 0.0 ? 0.0 : d * std::pow(a, pm2);
    }

    /// |d|^{p-2} recovered from a flux value.
    double diffusivity(double d, double f) const
    {
        if (d == 0.0) return kind == Kind::two ? 1.0 : 0.0;
        return f / d;
    }

    double p;
    double pm2;
    double inv_p;
    Kind kind = Kind::general;
};

struct KernelOutputs {
    std::vector<double>* div = nullptr;
    std::vector<double>* rate = nullptr;   // CFL rate per cell
    std::vector<double>* energy = nullptr; // face energy per cell
    std::vector<std::vector<double>>* weight_plus = nullptr;
    std::vector<std::vector<double>>* weight_minus = nullptr;
};

std::vector<std::size_t> row_bases(const Grid& g, const IndexBox& box)
{
    std::vector<std::size_t> rows;
    if (box.empty) return rows;
    rows.reserve(box.count() / (box.hi.back() - box.lo.back() + 1));
    for_each_row(g, box, [&](std::size_t base, std::size_t, std::size_t) { rows.push_back(base); });
    return rows;
}

// Staggered flux stencil restricted to an index box. Cells outside the box
// must be zero and stay untouched; the box must contain the nonzero cells
// plus one layer so the faces leaving it carry zero flux.
class FluxKernel {
public:
    FluxKernel(const Grid& g, const ExponentData& e) : grid_(g), strides_(g.strides())
    {
        if (e.p.size() != g.rank()) throw std::invalid_argument("exponent count does not match the grid rank");
        for (std::size_t a = 0; a < g.rank(); ++a) {
            if (e.p[a] < 2.0) throw std::invalid_argument("the flux scheme requires p_i >= 2");
            laws_.emplace_back(e.p[a]);
            inv_h_.push_back(1.0 / g.spacing[a]);
        }
        flux_.assign(g.size(), 0.0);
    }

    void apply(const std::vector<double>& u, const IndexBox& box, const KernelOutputs& out)
    {
        if (box.empty) return;
        const std::size_t rank = grid_.rank();
        const std::size_t last = rank - 1;
        const auto rows = row_bases(grid_, box);
        const std::size_t row_lo = box.lo[last];
        const std::size_t row_hi = box.hi[last] + 1;

        for (std::size_t a = 0; a < rank; ++a) {
            const PowerLaw& law = laws_[a];
            const double ih = inv_h_[a];
            const double ih2 = ih * ih;
            const double rate_coef = 2.0 * (law.p - 1.0) * ih2;
            const std::size_t s = strides_[a];
            const std::size_t n_a = grid_.dims[a];
            const bool first = a == 0;

            // + face flux of every cell in the box.
            parallel_for(rows.size(), [&](std::size_t rb, std::size_t re) {
                for (std::size_t r = rb; r < re; ++r) {
                    const std::size_t base = rows[r];
                    if (a == last) {
                        for (std::size_t k = row_lo; k < row_hi; ++k) {
                            const std::size_t c = base + k;
                            const double up = k + 1 < n_a ? u[c + 1] : 0.0;
                            flux_[c] = law.flux((up - u[c]) * ih);
                        }
                    } else {
                        const bool top = (base / s) % n_a == n_a - 1;
                        for (std::size_t k = row_lo; k < row_hi; ++k) {
                            const std::size_t c = base + k;
                            const double up = top ? 0.0 : u[c + s];
                            flux_[c] = law.flux((up - u[c]) * ih);
                        }
                    }
                }
            });

            parallel_for(rows.size(), [&](std::size_t rb, std::size_t re) {
                for (std::size_t r = rb; r < re; ++r) {
                    const std::size_t base = rows[r];
                    const std::size_t k_row = a == last ? 0 : (base / s) % n_a;
                    for (std::size_t k = row_lo; k < row_hi; ++k) {
                        const std::size_t c = base + k;
                        const std::size_t k_a = a == last ? k : k_row;
                        const double up = k_a + 1 < n_a ? u[c + s] : 0.0;
                        const double d_plus = (up - u[c]) * ih;
                        const double f_plus = flux_[c];
                        double d_minus;
                        double f_minus;
                        if (k_a == 0) {
                            d_minus = u[c] * ih;
                            f_minus = law.flux(d_minus);
                        } else if (k_a == box.lo[a]) {
                            d_minus = (u[c] - u[c - s]) * ih;
                            f_minus = law.flux(d_minus);
                        } else {
                            d_minus = (u[c] - u[c - s]) * ih;
                            f_minus = flux_[c - s];
                        }
                        const double div = (f_plus - f_minus) * ih;
                        if (first)
                            (*out.div)[c] = div;
                        else
                            (*out.div)[c] += div;
                        if (out.rate || out.weight_plus) {
                            const double g_plus = law.diffusivity(d_plus, f_plus);
                            const double g_minus = law.diffusivity(d_minus, f_minus);
                            if (out.rate) {
                                const double rate = rate_coef * std::max(g_plus, g_minus);
                                if (first)
                                    (*out.rate)[c] = rate;
                                else
                                    (*out.rate)[c] += rate;
                            }
                            if (out.weight_plus) {
                                (*out.weight_plus)[a][c] = (law.p - 1.0) * g_plus * ih2;
                                (*out.weight_minus)[a][c] = (law.p - 1.0) * g_minus * ih2;
                            }
                        }
                        if (out.energy) {
                            double en = f_plus * d_plus * law.inv_p;
                            if (k_a == 0) en += f_minus * d_minus * law.inv_p;
                            if (first)
                                (*out.energy)[c] = en;
                            else
                                (*out.energy)[c] += en;
                        }
                    }
                }
            });
        }
    }

    double max_over(const std::vector<double>& v, const IndexBox& box) const
    {
        double m = 0.0;
        for_each_row(grid_, box, [&](std::size_t base, std::size_t b, std::size_t e) {
            for (std::size_t k = b; k < e; ++k) m = std::max(m, v[base + k]);
        });
        return m;
    }

    const Grid& grid() const { return grid_; }

private:
    Grid grid_;
    std::vector<std::size_t> strides_;
    std::vector<PowerLaw> laws_;
    std::vector<double> inv_h_;
    std::vector<double> flux_;
};

IndexBox active_box(const Field& u)
{
    return nonzero_box(u, 0.0).expanded(u.grid, 1);
}

double safety_dt(double rate, double safety)
{
    return rate > 0.0 ? safety / rate : std::numeric_limits<double>::infinity();
}

} // namespace

void validate(const SolverConfig& cfg)
{
    if (!(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0)) throw std::invalid_argument("solver.cfl_safety must lie in (0, 1]");
    if (!(cfg.implicit_dt > 0.0)) throw std::invalid_argument("solver.implicit_dt must be positive");
    if (!(cfg.min_tol > 0.0)) throw std::invalid_argument("solver.min_tol must be positive");
    if (cfg.max_inner_iters < 1) throw std::invalid_argument("solver.max_inner_iters must be at least 1");
    if (cfg.max_linear_iters < 1) throw std::invalid_argument("solver.max_linear_iters must be at least 1");
    if (!(cfg.support_threshold >= 0.0)) throw std::invalid_argument("solver.support_threshold must be nonnegative");
    if (!(cfg.contact_threshold >= 0.0)) throw std::invalid_argument("solver.contact_threshold must be nonnegative");
    if (!std::is_sorted(cfg.snapshot_times.begin(), cfg.snapshot_times.end()))
        throw std::invalid_argument("solver.snapshot_times must be sorted");
}

Field flux_divergence(const Field& u, const ExponentData& e)
{
    validate(u);
    FluxKernel kernel(u.grid, e);
    Field div = Field::zeros(u.grid, u.time);
    kernel.apply(u.values, active_box(u), {.div = &div.values});
    return div;
}

double cfl_dt(const Field& u, const ExponentData& e, double safety)
{
    validate(u);
    FluxKernel kernel(u.grid, e);
    std::vector<double> div(u.values.size()), rate(u.values.size(), 0.0);
    const IndexBox box = active_box(u);
    kernel.apply(u.values, box, {.div = &div, .rate = &rate});
    return safety_dt(kernel.max_over(rate, box), safety);
}

double energy(const Field& u, const ExponentData& e)
{
    validate(u);
    FluxKernel kernel(u.grid, e);
    std::vector<double> div(u.values.size()), terms(u.values.size(), 0.0);
    kernel.apply(u.values, active_box(u), {.div = &div, .energy = &terms});
    return tree_sum(terms) * u.grid.cell_volume();
}

ExplicitEvaluation evaluate_explicit(const Field& u, const ExponentData& e, double safety)
{
    validate(u);
    FluxKernel kernel(u.grid, e);
    ExplicitEvaluation ev{Field::zeros(u.grid, u.time), 0.0};
    std::vector<double> rate(u.values.size(), 0.0);
    const IndexBox box = active_box(u);
    kernel.apply(u.values, box, {.div = &ev.divergence.values, .rate = &rate});
    ev.dt = safety_dt(kernel.max_over(rate, box), safety);
    return ev;
}

Field step_explicit(const Field& u, double dt, const ExponentData& e)
{
    validate(u);
    if (!(dt >= 0.0)) throw std::invalid_argument("step_explicit: dt must be nonnegative");
    FluxKernel kernel(u.grid, e);
    std::vector<double> div(u.values.size(), 0.0), rate(u.values.size(), 0.0);
    const IndexBox box = active_box(u);
    kernel.apply(u.values, box, {.div = &div, .rate = &rate});
    const double limit = safety_dt(kernel.max_over(rate, box), 1.0);
    if (dt > limit * (1.0 + 1e-12)) {
        std::ostringstream os;
        os.precision(17);
        os << "explicit step dt = " << dt << " exceeds the stability bound " << limit;
        throw CflError(os.str());
    }
    Field out = u;
    out.time = u.time + dt;
    for_each_row(u.grid, box, [&](std::size_t base, std::size_t b, std::size_t en) {
        for (std::size_t k = b; k < en; ++k) out.values[base + k] = u.values[base + k] + dt * div[base + k];
    });
    return out;
}

namespace {

double dot(const std::vector<double>& x, const std::vector<double>& y)
{
    return tree_sum_map(x.size(), [&](std::size_t i) { return x[i] * y[i]; });
}

} // namespace

Field step_implicit(const Field& u, double dt, const ExponentData& e, const SolverConfig& cfg, ImplicitStats* stats)
{
    validate(u);
    if (!(dt > 0.0)) throw std::invalid_argument("step_implicit: dt must be positive");
    const Grid& g = u.grid;
    const std::size_t n = g.size();
    const std::size_t rank = g.rank();
    const auto strides = g.strides();
    const IndexBox full = IndexBox::full(g);
    FluxKernel kernel(g, e);
    const double inv_dt = 1.0 / dt;

    std::vector<double> v = u.values;
    std::vector<double> div(n), terms(n), r(n), z(n), p(n), hp(n), d(n), diag(n), trial(n), r_trial(n);
    std::vector<std::vector<double>> w_plus(rank, std::vector<double>(n)), w_minus(rank, std::vector<double>(n));

    auto residual = [&](const std::vector<double>& x, std::vector<double>& res, bool with_energy) {
        kernel.apply(x, full, {.div = &div, .energy = with_energy ? &terms : nullptr});
        parallel_for(n, [&](std::size_t b, std::size_t en) {
            for (std::size_t i = b; i < en; ++i) res[i] = (x[i] - u.values[i]) * inv_dt - div[i];
        });
    };
    auto objective = [&](const std::vector<double>& x) {
        return tree_sum_map(n, [&](std::size_t i) {
            const double dv = x[i] - u.values[i];
            return terms[i] + 0.5 * inv_dt * dv * dv;
        });
    };
    // Hessian of the objective (per cell volume): I/dt + weighted Laplacian.
    auto hessian = [&](const std::vector<double>& x, std::vector<double>& y) {
        parallel_for(n, [&](std::size_t b, std::size_t en) {
            for (std::size_t i = b; i < en; ++i) {
                double acc = inv_dt * x[i];
                for (std::size_t a = 0; a < rank; ++a) {
                    const std::size_t s = strides[a];
                    const std::size_t k = (i / s) % g.dims[a];
                    const double up = k + 1 < g.dims[a] ? x[i + s] : 0.0;
                    const double down = k > 0 ? x[i - s] : 0.0;
                    acc += w_minus[a][i] * (x[i] - down) - w_plus[a][i] * (up - x[i]);
                }
                y[i] = acc;
            }
        });
    };

    residual(v, r, true);
    const double norm0 = std::sqrt(dot(r, r));
    ImplicitStats local;
    if (norm0 == 0.0) {
        if (stats) *stats = local;
        Field out = u;
        out.time = u.time + dt;
        return out;
    }
    double obj = objective(v);
    double rnorm = norm0;

    for (int it = 0;; ++it) {
        local.relative_gradient = rnorm / norm0;
        if (local.relative_gradient <= cfg.min_tol) break;
        if (it >= cfg.max_inner_iters) {
            Field last = u;
            last.values = v;
            last.time = u.time + dt;
            throw ImplicitSolveError("implicit step did not reach the gradient tolerance", std::move(last),
                                     local.relative_gradient);
        }
        ++local.newton_iters;

        // Linearise at v.
        kernel.apply(v, full, {.div = &div, .weight_plus = &w_plus, .weight_minus = &w_minus});
        parallel_for(n, [&](std::size_t b, std::size_t en) {
            for (std::size_t i = b; i < en; ++i) {
                double dg = inv_dt;
                for (std::size_t a = 0; a < rank; ++a) dg += w_plus[a][i] + w_minus[a][i];
                diag[i] = dg;
            }
        });

        // Preconditioned CG on H d = -r.
        const double forcing = std::min(0.1, std::sqrt(local.relative_gradient));
        std::fill(d.begin(), d.end(), 0.0);
        std::vector<double>& res = r_trial;
        for (std::size_t i = 0; i < n; ++i) res[i] = -r[i];
        for (std::size_t i = 0; i < n; ++i) z[i] = res[i] / diag[i];
        p = z;
        double rz = dot(res, z);
        const double target = forcing * rnorm;
        for (int k = 0; k < cfg.max_linear_iters; ++k) {
            hessian(p, hp);
            const double php = dot(p, hp);
            if (!(php > 0.0)) break;
            const double step = rz / php;
            for (std::size_t i = 0; i < n; ++i) {
                d[i] += step * p[i];
                res[i] -= step * hp[i];
            }
            ++local.linear_iters;
            if (std::sqrt(dot(res, res)) <= target) break;
            for (std::size_t i = 0; i < n; ++i) z[i] = res[i] / diag[i];
            const double rz_new = dot(res, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        }

        // Backtracking: accept on sufficient decrease of the objective or of
        // the gradient norm (the objective stalls at rounding level near the
        // minimiser).
        const double slope = dot(r, d);
        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = v[i] + alpha * d[i];
            residual(trial, r_trial, true);
            const double obj_trial = objective(trial);
            const double rnorm_trial = std::sqrt(dot(r_trial, r_trial));
            if (obj_trial <= obj + 1e-4 * alpha * slope || rnorm_trial < (1.0 - 1e-4 * alpha) * rnorm) {
                v.swap(trial);
                r.swap(r_trial);
                obj = obj_trial;
                rnorm = rnorm_trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            Field last = u;
            last.values = v;
            last.time = u.time + dt;
            throw ImplicitSolveError("implicit step line search failed", std::move(last), rnorm / norm0);
        }
    }

    if (stats) *stats = local;
    Field out = u;
    out.values = std::move(v);
    out.time = u.time + dt;
    return out;
}

DiagnosticsRow diagnose(const Field& u, const ExponentData& e, double support_threshold)
{
    DiagnosticsRow row;
    row.t = u.time;
    row.mass = mass(u);
    const Extrema ex = sup_inf(u);
    row.sup = ex.sup;
    row.inf = ex.inf;
    row.energy = energy(u, e);
    const double scale = std::max(std::abs(ex.sup), std::abs(ex.inf));
    const SupportBox box = support_box(u, support_threshold * scale);
    row.half_widths.resize(u.grid.rank(), 0.0);
    for (std::size_t a = 0; a < u.grid.rank(); ++a) row.half_widths[a] = box.half_width(a);
    return row;
}

namespace {

class Evolution {
public:
    Evolution(const Field& g, double t0, const ExponentData& e, const SolverConfig& cfg)
        : e_(e), cfg_(cfg), u_(g), kernel_(g.grid, e)
    {
        validate(g);
        validate(cfg);
        u_.time = t0;
        for (double v : g.values)
            if (v < 0.0) throw std::invalid_argument("evolve: initial datum must be nonnegative");
        contact_level_ = cfg.contact_threshold * sup_inf(g).sup;
        div_.assign(g.values.size(), 0.0);
        rate_.assign(g.values.size(), 0.0);
        active_ = nonzero_box(u_, 0.0);
        check_contact();
    }

    const Field& field() const { return u_; }
    std::size_t steps() const { return steps_; }

    void advance_to(double t_target)
    {
        while (u_.time < t_target) {
            if (cfg_.scheme == Scheme::explicit_flux)
                explicit_step(t_target);
            else
                implicit_step(t_target);
            ++steps_;
            check_contact();
        }
    }

private:
    void explicit_step(double t_target)
    {
        if (active_.empty) {
            u_.time = t_target;
            return;
        }
        const IndexBox box = active_.expanded(u_.grid, 1);
        kernel_.apply(u_.values, box, {.div = &div_, .rate = &rate_});
        const double dt_stable = safety_dt(kernel_.max_over(rate_, box), cfg_.cfl_safety);
        const double remaining = t_target - u_.time;
        const bool last = dt_stable >= remaining;
        const double dt = last ? remaining : dt_stable;
        for_each_row(u_.grid, box, [&](std::size_t base, std::size_t b, std::size_t en) {
            for (std::size_t k = b; k < en; ++k) u_.values[base + k] += dt * div_[base + k];
        });
        u_.time = last ? t_target : u_.time + dt;
        active_ = nonzero_box(u_, box, 0.0);
    }

    void implicit_step(double t_target)
    {
        const double remaining = t_target - u_.time;
        const bool last = cfg_.implicit_dt >= remaining;
        const double dt = last ? remaining : cfg_.implicit_dt;
        Field next = step_implicit(u_, dt, e_, cfg_);
        next.time = last ? t_target : u_.time + dt;
        u_ = std::move(next);
        active_ = nonzero_box(u_, 0.0);
    }

    void check_contact() const
    {
        if (active_.empty) return;
        const Grid& g = u_.grid;
        const std::size_t m = cfg_.contact_cells;
        auto near_boundary = [&](const IndexBox& b) {
            for (std::size_t a = 0; a < g.rank(); ++a)
                if (b.lo[a] < m || b.hi[a] + m >= g.dims[a]) return true;
            return false;
        };
        if (!near_boundary(active_)) return;
        const IndexBox significant = nonzero_box(u_, active_, contact_level_);
        if (!significant.empty && near_boundary(significant)) {
            std::ostringstream os;
            os.precision(10);
            os << "support reached within " << m << " cells of the boundary at t = " << u_.time
               << "; enlarge the domain";
            throw BoundaryContactError(os.str(), u_.time);
        }
    }

    const ExponentData& e_;
    const SolverConfig& cfg_;
    Field u_;
    FluxKernel kernel_;
    std::vector<double> div_;
    std::vector<double> rate_;
    IndexBox active_;
    double contact_level_ = 0.0;
    std::size_t steps_ = 0;
};

} // namespace

Trajectory evolve(const Field& g, double t0, double t1, const ExponentData& e, const SolverConfig& cfg)
{
    if (!(t0 < t1)) throw std::invalid_argument("evolve: requires t0 < t1");
    std::vector<double> times = cfg.snapshot_times;
    if (times.empty()) times = {t0, t1};
    for (double t : times)
        if (t < t0 || t > t1) throw std::invalid_argument("evolve: snapshot time outside [t0, t1]");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) throw std::invalid_argument("evolve: snapshot times must increase strictly");

    Evolution run(g, t0, e, cfg);
    Trajectory traj;
    for (double t : times) {
        run.advance_to(t);
        traj.snapshots.push_back(run.field());
        traj.diagnostics.push_back(diagnose(run.field(), e, cfg.support_threshold));
    }
    run.advance_to(t1);
    return traj;
}

Field evolve_to(const Field& g, double t0, double t1, const ExponentData& e, const SolverConfig& cfg, std::size_t* steps)
{
    if (!(t0 <= t1)) throw std::invalid_argument("evolve_to: requires t0 <= t1");
    Evolution run(g, t0, e, cfg);
    run.advance_to(t1);
    if (steps) *steps = run.steps();
    return run.field();
}

} // namespace apde
