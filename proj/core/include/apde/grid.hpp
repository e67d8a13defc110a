#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace apde {

/// Cell-centred tensor grid. Cell k on axis i has centre
/// origin[i] + (k + 1/2) spacing[i]; values are stored row-major with the
/// last axis fastest.
struct Grid {
    std::vector<std::size_t> dims;
    std::vector<double> origin;
    std::vector<double> spacing;

    std::size_t rank() const { return dims.size(); }
    std::size_t size() const;
    double cell_volume() const;
    double center(std::size_t axis, std::size_t k) const { return origin[axis] + (static_cast<double>(k) + 0.5) * spacing[axis]; }
    double lower(std::size_t axis) const { return origin[axis]; }
    double upper(std::size_t axis) const { return origin[axis] + static_cast<double>(dims[axis]) * spacing[axis]; }
    std::vector<std::size_t> strides() const;

    /// n^rank cells covering [lo, hi]^rank.
    static Grid cube(std::size_t rank, std::size_t n, double lo, double hi);

    bool operator==(const Grid&) const = default;
};

class GridError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Throws GridError unless dims >= 2 and spacing/origin are finite with spacing > 0.
void validate(const Grid& g);

struct Field {
    Grid grid;
    std::vector<double> values;
    double time = 0.0;

    static Field zeros(const Grid& g, double time = 0.0);
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

/// Throws GridError if the value count disagrees with the grid or a value is not finite.
void validate(const Field& u);

/// Inclusive index box; empty when any lo > hi.
struct IndexBox {
    std::vector<std::size_t> lo;
    std::vector<std::size_t> hi;
    bool empty = true;

    static IndexBox full(const Grid& g);
    /// Grows by `cells` on every side, clamped to the grid.
    IndexBox expanded(const Grid& g, std::size_t cells) const;
    std::size_t count() const;
};

/// Smallest index box containing every cell with |u| > threshold.
IndexBox nonzero_box(const Field& u, double threshold = 0.0);
/// Same scan restricted to `within`.
IndexBox nonzero_box(const Field& u, const IndexBox& within, double threshold);

/// Calls visit(linear_index, last_axis_begin, last_axis_end) for every row of
/// the box along the last axis. Rows are enumerated in storage order.
template <class Visit>
void for_each_row(const Grid& g, const IndexBox& box, Visit&& visit);

double mass(const Field& u);
/// (sum |v|^p * cell volume)^(1/p); throws std::invalid_argument for p < 1.
double lp_norm(const Field& u, double p);
struct Extrema {
    double sup = 0.0;
    double inf = 0.0;
};
Extrema sup_inf(const Field& u);

/// Physical bounding box of {|u| > threshold}, measured on the outer faces of
/// the extreme cells.
struct SupportBox {
    bool empty = true;
    std::vector<double> lo;
    std::vector<double> hi;

    double half_width(std::size_t axis) const { return empty ? 0.0 : 0.5 * (hi[axis] - lo[axis]); }
};
SupportBox support_box(const Field& u, double threshold);

class CoverageError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Multilinear interpolation between cell centres. Points outside the hull
/// of the cell centres throw CoverageError.
double interpolate(const Field& u, std::span<const double> x);

/// Exact min and max of the multilinear interpolant of
/// (1 - w) a + w b over the box [lo, hi] (b may be null for w = 0). The
/// extrema of a piecewise multilinear function are attained at the
/// intersections of box faces and cell-centre planes, which are enumerated.
Extrema interpolant_extrema(const Field& a, const Field* b, double w, std::span<const double> lo, std::span<const double> hi);

/// Copy of u embedded in a larger grid with the given numbers of zero cells
/// added below and above each axis.
Field pad_zero(const Field& u, std::span<const std::size_t> below, std::span<const std::size_t> above);

/// One diagnostics row per snapshot.
struct DiagnosticsRow {
    double t = 0.0;
    double mass = 0.0;
    double sup = 0.0;
    double inf = 0.0;
    double energy = 0.0;
    std::vector<double> half_widths;
};

/// Snapshots at strictly increasing times with matching diagnostics rows.
struct Trajectory {
    std::vector<Field> snapshots;
    std::vector<DiagnosticsRow> diagnostics;

    std::vector<double> times() const;
    /// Throws std::logic_error if times are not strictly increasing or the row count differs.
    void check() const;
};

/// Header `t,mass,sup,inf,energy,hw_1,...,hw_N`, values printed with 17 significant digits.
void write_diagnostics_csv(const std::filesystem::path& path, std::span<const DiagnosticsRow> rows, std::size_t rank);
std::vector<DiagnosticsRow> read_diagnostics_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

template <class Visit>
void for_each_row(const Grid& g, const IndexBox& box, Visit&& visit)
{
    if (box.empty) return;
    const std::size_t rank = g.rank();
    const auto strides = g.strides();
    std::vector<std::size_t> idx(box.lo.begin(), box.lo.end());
    const std::size_t last = rank - 1;
    for (;;) {
        std::size_t base = 0;
        for (std::size_t a = 0; a < last; ++a) base += idx[a] * strides[a];
        visit(base, box.lo[last], box.hi[last] + 1);
        if (rank == 1) return;
        std::size_t a = last;
        for (;;) {
            if (a == 0) return;
            --a;
            if (idx[a] < box.hi[a]) {
                ++idx[a];
                break;
            }
            idx[a] = box.lo[a];
        }
    }
}

} // namespace apde
