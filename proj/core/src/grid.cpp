#include "apde/grid.hpp"

#include "apde/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace apde {

std::size_t Grid::size() const
{
    if (dims.empty()) return 0;
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

double Grid::cell_volume() const
{
    double v = 1.0;
    for (double h : spacing) v *= h;
    return v;
}

std::vector<std::size_t> Grid::strides() const
{
    std::vector<std::size_t> s(dims.size(), 1);
    for (std::size_t a = dims.size(); a-- > 1;) s[a - 1] = s[a] * dims[a];
    return s;
}

Grid Grid::cube(std::size_t rank, std::size_t n, double lo, double hi)
{
    Grid g;
    g.dims.assign(rank, n);
    g.origin.assign(rank, lo);
    g.spacing.assign(rank, (hi - lo) / static_cast<double>(n));
    return g;
}

void validate(const Grid& g)
{
    if (g.dims.empty()) throw GridError("grid has no axes");
    if (g.origin.size() != g.rank() || g.spacing.size() != g.rank())
        throw GridError("grid origin/spacing length does not match dims");
    for (std::size_t a = 0; a < g.rank(); ++a) {
        if (g.dims[a] < 2) throw GridError("axis " + std::to_string(a + 1) + " has fewer than 2 cells");
        if (!std::isfinite(g.origin[a])) throw GridError("axis " + std::to_string(a + 1) + " origin is not finite");
        if (!std::isfinite(g.spacing[a]) || g.spacing[a] <= 0.0)
            throw GridError("axis " + std::to_string(a + 1) + " spacing must be finite and positive");
    }
}

Field Field::zeros(const Grid& g, double time)
{
    return Field{g, std::vector<double>(g.size(), 0.0), time};
}

void validate(const Field& u)
{
    validate(u.grid);
    if (u.values.size() != u.grid.size())
        throw GridError("field has " + std::to_string(u.values.size()) + " values, grid needs " + std::to_string(u.grid.size()));
    for (std::size_t i = 0; i < u.values.size(); ++i)
        if (!std::isfinite(u.values[i])) throw GridError("field value " + std::to_string(i) + " is not finite");
}

IndexBox IndexBox::full(const Grid& g)
{
    IndexBox b;
    b.lo.assign(g.rank(), 0);
    b.hi.resize(g.rank());
    for (std::size_t a = 0; a < g.rank(); ++a) b.hi[a] = g.dims[a] - 1;
    b.empty = g.size() == 0;
    return b;
}

IndexBox IndexBox::expanded(const Grid& g, std::size_t cells) const
{
    if (empty) return *this;
    IndexBox b = *this;
    for (std::size_t a = 0; a < g.rank(); ++a) {
        b.lo[a] = lo[a] >= cells ? lo[a] - cells : 0;
        b.hi[a] = std::min(g.dims[a] - 1, hi[a] + cells);
    }
    return b;
}

std::size_t IndexBox::count() const
{
    if (empty) return 0;
    std::size_t c = 1;
    for (std::size_t a = 0; a < lo.size(); ++a) c *= hi[a] - lo[a] + 1;
    return c;
}

IndexBox nonzero_box(const Field& u, double threshold)
{
    return nonzero_box(u, IndexBox::full(u.grid), threshold);
}

IndexBox nonzero_box(const Field& u, const IndexBox& within, double threshold)
{
    const Grid& g = u.grid;
    const std::size_t rank = g.rank();
    const auto strides = g.strides();
    IndexBox box;
    box.lo.assign(rank, std::numeric_limits<std::size_t>::max());
    box.hi.assign(rank, 0);
    for_each_row(g, within, [&](std::size_t base, std::size_t b, std::size_t e) {
        std::size_t first = e;
        std::size_t last = e;
        for (std::size_t k = b; k < e; ++k) {
            if (std::abs(u.values[base + k]) > threshold) {
                if (first == e) first = k;
                last = k;
            }
        }
        if (first == e) return;
        box.empty = false;
        for (std::size_t a = 0; a + 1 < rank; ++a) {
            const std::size_t k = (base / strides[a]) % g.dims[a];
            box.lo[a] = std::min(box.lo[a], k);
            box.hi[a] = std::max(box.hi[a], k);
        }
        box.lo[rank - 1] = std::min(box.lo[rank - 1], first);
        box.hi[rank - 1] = std::max(box.hi[rank - 1], last);
    });
    return box;
}

double mass(const Field& u)
{
    return tree_sum(u.values) * u.grid.cell_volume();
}

double lp_norm(const Field& u, double p)
{
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
    const auto& v = u.values;
    const double s = tree_sum_map(v.size(), [&](std::size_t i) { return std::pow(std::abs(v[i]), p); });
    return std::pow(s * u.grid.cell_volume(), 1.0 / p);
}

Extrema sup_inf(const Field& u)
{
    if (u.values.empty()) return {};
    auto [mn, mx] = std::minmax_element(u.values.begin(), u.values.end());
    return {*mx, *mn};
}

SupportBox support_box(const Field& u, double threshold)
{
    const IndexBox b = nonzero_box(u, threshold);
    SupportBox s;
    if (b.empty) return s;
    s.empty = false;
    for (std::size_t a = 0; a < u.grid.rank(); ++a) {
        s.lo.push_back(u.grid.origin[a] + static_cast<double>(b.lo[a]) * u.grid.spacing[a]);
        s.hi.push_back(u.grid.origin[a] + static_cast<double>(b.hi[a] + 1) * u.grid.spacing[a]);
    }
    return s;
}

namespace {

constexpr double kSnap = 1e-9;

struct AxisWeight {
    std::size_t i0 = 0;
    double w = 0.0;
};

AxisWeight axis_weight(const Grid& g, std::size_t a, double x)
{
    const double n = static_cast<double>(g.dims[a]);
    double c = (x - g.origin[a]) / g.spacing[a] - 0.5;
    const double r = std::round(c);
    if (std::abs(c - r) <= kSnap) c = r;
    if (!(c >= 0.0 && c <= n - 1.0)) {
        std::ostringstream os;
        os.precision(17);
        os << "point " << x << " on axis " << a + 1 << " lies outside the sampled range [" << g.center(a, 0) << ", "
           << g.center(a, g.dims[a] - 1) << "]";
        throw CoverageError(os.str());
    }
    std::size_t i0 = static_cast<std::size_t>(std::floor(c));
    if (i0 > g.dims[a] - 2) i0 = g.dims[a] - 2;
    return {i0, c - static_cast<double>(i0)};
}

} // namespace

double interpolate(const Field& u, std::span<const double> x)
{
    const Grid& g = u.grid;
    const std::size_t rank = g.rank();
    if (x.size() != rank) throw std::invalid_argument("interpolate: point rank mismatch");
    const auto strides = g.strides();
    AxisWeight aw[8];
    std::vector<AxisWeight> aw_heap;
    AxisWeight* w = aw;
    if (rank > 8) {
        aw_heap.resize(rank);
        w = aw_heap.data();
    }
    std::size_t base = 0;
    for (std::size_t a = 0; a < rank; ++a) {
        w[a] = axis_weight(g, a, x[a]);
        base += w[a].i0 * strides[a];
    }
    double value = 0.0;
    const std::size_t corners = std::size_t{1} << rank;
    for (std::size_t c = 0; c < corners; ++c) {
        double weight = 1.0;
        std::size_t idx = base;
        for (std::size_t a = 0; a < rank; ++a) {
            if (c >> a & 1) {
                weight *= w[a].w;
                idx += strides[a];
            } else {
                weight *= 1.0 - w[a].w;
            }
        }
        if (weight != 0.0) value += weight * u.values[idx];
    }
    return value;
}

Extrema interpolant_extrema(const Field& a, const Field* b, double w, std::span<const double> lo, std::span<const double> hi)
{
    const Grid& g = a.grid;
    const std::size_t rank = g.rank();
    if (b && !(b->grid == g)) throw std::invalid_argument("interpolant_extrema: blended fields must share a grid");
    std::vector<std::vector<double>> candidates(rank);
    for (std::size_t ax = 0; ax < rank; ++ax) {
        if (!(lo[ax] <= hi[ax])) throw std::invalid_argument("interpolant_extrema: empty box");
        auto& c = candidates[ax];
        c.push_back(lo[ax]);
        for (std::size_t k = 0; k < g.dims[ax]; ++k) {
            const double x = g.center(ax, k);
            if (x > lo[ax] && x < hi[ax]) c.push_back(x);
        }
        if (hi[ax] > lo[ax]) c.push_back(hi[ax]);
    }
    Extrema ex{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    std::vector<std::size_t> idx(rank, 0);
    std::vector<double> x(rank);
    for (;;) {
        for (std::size_t ax = 0; ax < rank; ++ax) x[ax] = candidates[ax][idx[ax]];
        double v = interpolate(a, x);
        if (b && w != 0.0) v = (1.0 - w) * v + w * interpolate(*b, x);
        ex.sup = std::max(ex.sup, v);
        ex.inf = std::min(ex.inf, v);
        std::size_t ax = rank;
        for (;;) {
            if (ax == 0) return ex;
            --ax;
            if (++idx[ax] < candidates[ax].size()) break;
            idx[ax] = 0;
        }
    }
}

Field pad_zero(const Field& u, std::span<const std::size_t> below, std::span<const std::size_t> above)
{
    const Grid& g = u.grid;
    Grid big = g;
    for (std::size_t a = 0; a < g.rank(); ++a) {
        big.dims[a] += below[a] + above[a];
        big.origin[a] -= static_cast<double>(below[a]) * g.spacing[a];
    }
    Field out = Field::zeros(big, u.time);
    const auto big_strides = big.strides();
    std::size_t shift = 0;
    for (std::size_t a = 0; a < g.rank(); ++a) shift += below[a] * big_strides[a];
    const auto strides = g.strides();
    for_each_row(g, IndexBox::full(g), [&](std::size_t base, std::size_t b, std::size_t e) {
        std::size_t big_base = shift;
        for (std::size_t a = 0; a + 1 < g.rank(); ++a) big_base += ((base / strides[a]) % g.dims[a]) * big_strides[a];
        std::copy(u.values.begin() + base + b, u.values.begin() + base + e, out.values.begin() + big_base + b);
    });
    return out;
}

std::vector<double> Trajectory::times() const
{
    std::vector<double> t;
    t.reserve(snapshots.size());
    for (const auto& s : snapshots) t.push_back(s.time);
    return t;
}

void Trajectory::check() const
{
    if (diagnostics.size() != snapshots.size())
        throw std::logic_error("trajectory has " + std::to_string(snapshots.size()) + " snapshots but " +
                               std::to_string(diagnostics.size()) + " diagnostics rows");
    for (std::size_t k = 1; k < snapshots.size(); ++k)
        if (!(snapshots[k].time > snapshots[k - 1].time))
            throw std::logic_error("trajectory times are not strictly increasing at snapshot " + std::to_string(k));
}

void write_diagnostics_csv(const std::filesystem::path& path, std::span<const DiagnosticsRow> rows, std::size_t rank)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "t,mass,sup,inf,energy";
    for (std::size_t a = 0; a < rank; ++a) out << ",hw_" << a + 1;
    out << '\n';
    out.precision(17);
    for (const auto& r : rows) {
        out << r.t << ',' << r.mass << ',' << r.sup << ',' << r.inf << ',' << r.energy;
        for (std::size_t a = 0; a < rank; ++a) out << ',' << (a < r.half_widths.size() ? r.half_widths[a] : 0.0);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<DiagnosticsRow> read_diagnostics_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,mass,sup,inf,energy", 0) != 0)
        throw std::runtime_error(path.string() + ": missing diagnostics header");
    const std::size_t columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    std::vector<DiagnosticsRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
        if (v.size() != columns)
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(columns) + " columns");
        DiagnosticsRow r{v[0], v[1], v[2], v[3], v[4], {}};
        r.half_widths.assign(v.begin() + 5, v.end());
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace apde
