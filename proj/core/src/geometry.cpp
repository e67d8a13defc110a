#include "apde/geometry.hpp"

#include "apde/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace apde {

ScaleTransform ScaleTransform::mass_preserving(double rho, const ExponentData& e)
{
    return {rho, std::pow(rho, -static_cast<double>(e.n))};
}

ScaleTransform compose(const ScaleTransform& a, const ScaleTransform& b)
{
    return {a.rho * b.rho, a.theta * b.theta};
}

ScaleTransform invert(const ScaleTransform& t)
{
    return {1.0 / t.rho, 1.0 / t.theta};
}

ScaleFactors scale_factors(const ScaleTransform& t, const ExponentData& e)
{
    if (!(t.rho > 0.0) || !(t.theta > 0.0)) throw std::invalid_argument("scale transform parameters must be positive");
    ScaleFactors f;
    f.space.resize(e.p.size());
    for (std::size_t i = 0; i < e.p.size(); ++i)
        f.space[i] = std::pow(t.theta, (e.p[i] - e.p_bar) / e.p[i]) * std::pow(t.rho, e.p_bar / e.p[i]);
    f.time = std::pow(t.theta, 2.0 - e.p_bar) * std::pow(t.rho, e.p_bar);
    return f;
}

std::vector<double> transform_point(const ScaleTransform& t, std::span<const double> z, const ExponentData& e)
{
    const std::size_t n = e.p.size();
    if (z.size() != n + 1) throw std::invalid_argument("transform_point: point must have N+1 coordinates");
    const ScaleFactors f = scale_factors(t, e);
    std::vector<double> out(n + 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = f.space[i] * z[i];
    out[n] = f.time * z[n];
    return out;
}

namespace {

struct AxisSample {
    std::size_t i0;
    double w;
};

bool outer_layer_is_zero(const Field& u)
{
    const Grid& g = u.grid;
    IndexBox inner = IndexBox::full(g);
    for (std::size_t a = 0; a < g.rank(); ++a) {
        inner.lo[a] = 1;
        inner.hi[a] = g.dims[a] - 2;
    }
    const IndexBox nz = nonzero_box(u, 0.0);
    if (nz.empty) return true;
    for (std::size_t a = 0; a < g.rank(); ++a)
        if (nz.lo[a] < inner.lo[a] || nz.hi[a] > inner.hi[a]) return false;
    return true;
}

std::string describe_range(double lo, double hi)
{
    std::ostringstream os;
    os.precision(10);
    os << '[' << lo << ", " << hi << ']';
    return os.str();
}

// Per-axis interpolation stencils for sample coordinates factor * target centres.
std::vector<std::vector<AxisSample>> axis_samples(const Grid& src, const Grid& target, std::span<const double> factor)
{
    std::vector<std::vector<AxisSample>> out(src.rank());
    for (std::size_t a = 0; a < src.rank(); ++a) {
        const double n = static_cast<double>(src.dims[a]);
        out[a].resize(target.dims[a]);
        for (std::size_t k = 0; k < target.dims[a]; ++k) {
            const double x = factor[a] * target.center(a, k);
            double c = (x - src.origin[a]) / src.spacing[a] - 0.5;
            const double r = std::round(c);
            if (std::abs(c - r) <= 1e-9) c = r;
            if (!(c >= 0.0 && c <= n - 1.0))
                throw CoverageError("sample coordinate " + std::to_string(x) + " on axis " + std::to_string(a + 1) +
                                    " lies outside the source range " +
                                    describe_range(src.center(a, 0), src.center(a, src.dims[a] - 1)));
            std::size_t i0 = static_cast<std::size_t>(std::floor(c));
            if (i0 > src.dims[a] - 2) i0 = src.dims[a] - 2;
            out[a][k] = {i0, c - static_cast<double>(i0)};
        }
    }
    return out;
}

} // namespace

Field transform_field(const ScaleTransform& t, const Field& u, const Grid& target, const ExponentData& e,
                      const TransformOptions& opts)
{
    validate(target);
    const std::size_t rank = u.grid.rank();
    if (target.rank() != rank || e.p.size() != rank) throw std::invalid_argument("transform_field: rank mismatch");
    const ScaleFactors f = scale_factors(t, e);

    // Sample hull per axis, padded source if allowed.
    const Field* src = &u;
    Field padded;
    std::vector<std::size_t> below(rank, 0), above(rank, 0);
    bool needs_pad = false;
    for (std::size_t a = 0; a < rank; ++a) {
        const double x0 = f.space[a] * target.center(a, 0);
        const double x1 = f.space[a] * target.center(a, target.dims[a] - 1);
        const double lo_src = u.grid.center(a, 0);
        const double hi_src = u.grid.center(a, u.grid.dims[a] - 1);
        const double h = u.grid.spacing[a];
        const double slack = 1e-9 * h;
        if (x0 < lo_src - slack) {
            below[a] = static_cast<std::size_t>(std::ceil((lo_src - x0) / h)) + 1;
            needs_pad = true;
        }
        if (x1 > hi_src + slack) {
            above[a] = static_cast<std::size_t>(std::ceil((x1 - hi_src) / h)) + 1;
            needs_pad = true;
        }
    }
    if (needs_pad) {
        if (opts.extension != Extension::zero)
            throw CoverageError("target grid maps outside the source field and zero extension is disabled");
        if (!outer_layer_is_zero(u))
            throw CoverageError("zero extension requires a source that vanishes on its outer cell layer");
        padded = pad_zero(u, below, above);
        src = &padded;
    }

    const auto samples = axis_samples(src->grid, target, f.space);
    Field out = Field::zeros(target, u.time / f.time);
    const auto src_strides = src->grid.strides();
    const auto tgt_strides = target.strides();
    const std::size_t corners = std::size_t{1} << rank;
    const double inv_theta = 1.0 / t.theta;
    const std::size_t rows = target.size() / target.dims[rank - 1];

    parallel_for(rows, [&](std::size_t rb, std::size_t re) {
        std::vector<std::size_t> idx(rank, 0);
        std::vector<AxisSample> s(rank);
        for (std::size_t row = rb; row < re; ++row) {
            std::size_t rem = row;
            for (std::size_t a = rank - 1; a-- > 0;) {
                idx[a] = rem % target.dims[a];
                rem /= target.dims[a];
            }
            std::size_t base_out = 0;
            std::size_t base_src = 0;
            for (std::size_t a = 0; a + 1 < rank; ++a) {
                s[a] = samples[a][idx[a]];
                base_out += idx[a] * tgt_strides[a];
                base_src += s[a].i0 * src_strides[a];
            }
            const auto& last = samples[rank - 1];
            for (std::size_t k = 0; k < target.dims[rank - 1]; ++k) {
                s[rank - 1] = last[k];
                const std::size_t base = base_src + last[k].i0;
                double v = 0.0;
                for (std::size_t c = 0; c < corners; ++c) {
                    double w = 1.0;
                    std::size_t at = base;
                    for (std::size_t a = 0; a < rank; ++a) {
                        if (c >> a & 1) {
                            w *= s[a].w;
                            at += src_strides[a];
                        } else {
                            w *= 1.0 - s[a].w;
                        }
                    }
                    if (w != 0.0) v += w * src->values[at];
                }
                out.values[base_out + k] = v * inv_theta;
            }
        }
    });

    if (opts.renormalize_mass) {
        const double want = mass(u) / (t.theta * std::pow(t.rho, static_cast<double>(rank)));
        const double have = mass(out);
        if (have != 0.0) {
            const double scale = want / have;
            for (double& v : out.values) v *= scale;
        }
    }
    return out;
}

Grid pullback_grid(const ScaleTransform& t, const Grid& g, const ExponentData& e)
{
    const ScaleFactors f = scale_factors(t, e);
    Grid out = g;
    for (std::size_t a = 0; a < g.rank(); ++a) {
        out.origin[a] = g.origin[a] / f.space[a];
        out.spacing[a] = g.spacing[a] / f.space[a];
    }
    return out;
}

double IntrinsicBox::volume() const
{
    double v = 1.0;
    for (double h : half_widths) v *= 2.0 * h;
    return v;
}

IntrinsicBox intrinsic_box(std::span<const double> center, double rho, double theta, const ExponentData& e, bool with_time)
{
    if (!(rho > 0.0) || !(theta > 0.0)) throw std::invalid_argument("intrinsic_box: rho and theta must be positive");
    if (center.size() != e.p.size()) throw std::invalid_argument("intrinsic_box: centre rank mismatch");
    IntrinsicBox box;
    box.center.assign(center.begin(), center.end());
    box.rho = rho;
    box.theta = theta;
    const ScaleFactors f = scale_factors({rho, theta}, e);
    box.half_widths.resize(f.space.size());
    for (std::size_t i = 0; i < f.space.size(); ++i) box.half_widths[i] = 0.5 * f.space[i];
    if (with_time) box.time_depth = f.time;
    return box;
}

std::vector<Field> phi_map(std::span<const Field> slices, const Grid& target, const ExponentData& e,
                           const TransformOptions& opts)
{
    std::vector<Field> out;
    out.reserve(slices.size());
    for (const Field& u : slices) {
        if (!(u.time > 0.0)) throw std::invalid_argument("phi_map: slice times must be strictly positive");
        const double s = std::log(u.time);
        Field w = transform_field(ScaleTransform::mass_preserving(std::exp(s / e.sigma), e), u, target, e, opts);
        w.time = s;
        out.push_back(std::move(w));
    }
    return out;
}

std::vector<Field> psi_map(std::span<const Field> slices, const Grid& target, const ExponentData& e,
                           const TransformOptions& opts)
{
    std::vector<Field> out;
    out.reserve(slices.size());
    for (const Field& w : slices) {
        const double t = std::exp(w.time);
        Field u = transform_field(ScaleTransform::mass_preserving(std::exp(-w.time / e.sigma), e), w, target, e, opts);
        u.time = t;
        out.push_back(std::move(u));
    }
    return out;
}

double krylov_safonov_omega(double gamma, double beta)
{
    return 2.0 * std::pow(2.0 * gamma, beta);
}

bool quasi_ball_contains(std::span<const double> outer_center, double outer_radius,
                         std::span<const double> inner_center, double inner_radius, const ExponentData& e)
{
    const std::size_t n = e.p.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double reach_outer = 2.0 * std::pow(outer_radius, 1.0 / e.q_space[i]);
        const double reach_inner = 2.0 * std::pow(inner_radius, 1.0 / e.q_space[i]);
        if (std::abs(inner_center[i] - outer_center[i]) + reach_inner > reach_outer) return false;
    }
    const double t_outer = std::pow(outer_radius, 1.0 / e.q_time);
    const double t_inner = std::pow(inner_radius, 1.0 / e.q_time);
    return std::abs(inner_center[n] - outer_center[n]) + t_inner <= t_outer;
}

KrylovSafonovResult krylov_safonov_select(const SampledFunction& u, std::size_t x0, double beta, const ExponentData& e)
{
    if (u.points.size() != u.values.size()) throw std::invalid_argument("krylov_safonov_select: points/values mismatch");
    if (x0 >= u.points.size()) throw std::invalid_argument("krylov_safonov_select: x0 is not a sample index");
    if (!(beta > 0.0)) throw std::invalid_argument("krylov_safonov_select: beta must be positive");
    if (!(u.values[x0] >= 1.0)) throw std::invalid_argument("krylov_safonov_select: requires u(x0) >= 1");
    if (!std::isfinite(e.gamma))
        throw std::invalid_argument("krylov_safonov_select: the quasi-triangle constant gamma overflows for these exponents");

    const double omega = krylov_safonov_omega(e.gamma, beta);
    const double shrink = std::pow(omega, -2.0 / beta);
    const auto& center0 = u.points[x0];
    // Samples outside B_1(x0) count as zero.
    std::vector<char> inside(u.points.size());
    for (std::size_t k = 0; k < u.points.size(); ++k) inside[k] = quasi_metric(center0, u.points[k], e) < 1.0;

    KrylovSafonovResult res;
    res.omega = omega;
    std::size_t x = x0;
    double r = 1.0 / (2.0 * e.gamma);
    for (int step = 0; step < 100000; ++step) {
        double sup = -std::numeric_limits<double>::infinity();
        std::size_t arg = x;
        for (std::size_t k = 0; k < u.points.size(); ++k) {
            if (quasi_metric(u.points[x], u.points[k], e) >= r) continue;
            const double v = inside[k] ? u.values[k] : 0.0;
            if (v > sup) {
                sup = v;
                arg = k;
            }
        }
        if (std::pow(r, beta) * sup <= omega) {
            res.index = x;
            res.point = u.points[x];
            res.radius = r;
            res.steps = step;
            return res;
        }
        x = arg;
        r *= shrink;
    }
    throw std::runtime_error("krylov_safonov_select: no termination; samples are not bounded");
}

} // namespace apde
