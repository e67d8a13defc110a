#include "apde/harness.hpp"
#include "apde/parallel.hpp"
#include "apde/solver.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace apde;

namespace {

Field bump_field(const Grid& g, std::uint64_t seed, int bumps = 3, double amp = 1.0)
{
    std::mt19937_64 rng(seed);
    return random_bump_field(g, rng, bumps, 0.5 * amp, amp);
}

// Bumps generated on [-1, 1]^3, embedded in the zero-padded box [-2, 2]^3.
Field padded_bumps(std::size_t n, std::uint64_t seed, int bumps, double amp)
{
    const Field inner = bump_field(Grid::cube(3, n, -1.0, 1.0), seed, bumps, amp);
    const std::vector<std::size_t> pad(3, n / 2);
    return pad_zero(inner, pad, pad);
}

double l2_dist(const Field& a, const Field& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
    return std::sqrt(s * a.grid.cell_volume());
}

// Pyramid max(0, c - sum |x_i - x0_i|) with apex at a cell centre; every face
// difference quotient is 0 or 1 in magnitude, and the apex has 1 on all axes.
Field pyramid(const Grid& g)
{
    Field u = Field::zeros(g);
    const auto st = g.strides();
    const double apex = g.center(0, g.dims[0] / 2);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double s = 0.0;
        for (std::size_t a = 0; a < 3; ++a) s += std::abs(g.center(a, (i / st[a]) % g.dims[a]) - apex);
        u.values[i] = std::max(0.0, 0.3 - s);
    }
    return u;
}

} // namespace

TEST_CASE("flux divergence matches the face-by-face oracle")
{
    const Grid g = Grid::cube(3, 14, -1.0, 1.0);
    const Field u = bump_field(g, 1);
    for (const auto& p : std::vector<std::vector<double>>{{2.5, 2.5, 2.5}, {3.0, 4.0, 2.5}, {2.1, 2.2, 2.3}}) {
        const auto e = derive_exponents(p);
        const Field div = flux_divergence(u, e);
        const auto ref = oracle::flux_divergence(u, p);
        double scale = 0.0;
        for (double v : ref) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 0; i < ref.size(); ++i) REQUIRE(std::abs(div.values[i] - ref[i]) <= 1e-12 * scale);
        CHECK(energy(u, e) == doctest::Approx(oracle::energy(u, p)).epsilon(1e-12));
    }
}

TEST_CASE("flux divergence of constant and linear data")
{
    const auto e = derive_exponents(std::vector<double>{2.5, 2.5, 2.5});
    const Grid g = Grid::cube(3, 10, 0.0, 1.0);
    const Field zero = Field::zeros(g);
    for (double v : flux_divergence(zero, e).values) CHECK(v == 0.0);

    Field c = Field::zeros(g);
    Field lin = Field::zeros(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        c.values[i] = 3.0;
        lin.values[i] = 2.0 + g.center(0, i / 100);
    }
    const Field dc = flux_divergence(c, e);
    const Field dl = flux_divergence(lin, e);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t idx[3] = {i / 100, (i / 10) % 10, i % 10};
        bool interior = true;
        for (std::size_t k : idx) interior = interior && k > 0 && k < 9;
        if (!interior) continue;
        CHECK(dc.values[i] == 0.0);
        CHECK(std::abs(dl.values[i]) <= 1e-9);
    }
    CHECK(energy(c, e) > 0.0);
}

TEST_CASE("CFL step")
{
    const auto e = derive_exponents(std::vector<double>{2.5, 2.5, 2.5});
    CHECK(std::isinf(cfl_dt(Field::zeros(Grid::cube(3, 8, 0.0, 1.0)), e, 0.4)));

    const Field u64 = pyramid(Grid::cube(3, 64, 0.0, 1.0));
    const double dt64 = cfl_dt(u64, e, 0.4);
    CHECK(dt64 == doctest::Approx(0.4 / 36864.0).epsilon(1e-10));

    const Field u128 = pyramid(Grid::cube(3, 128, 0.0, 1.0));
    CHECK(cfl_dt(u128, e, 0.4) == doctest::Approx(dt64 / 4.0).epsilon(1e-10));

    CHECK_THROWS_AS(step_explicit(u64, 1.01 * dt64 / 0.4, e), CflError);
    CHECK_NOTHROW(step_explicit(u64, dt64 / 0.4, e));
}

TEST_CASE("explicit scheme: zero, mass, order")
{
    const auto e = derive_exponents(std::vector<double>{2.2, 2.5, 2.8});
    Field lo = padded_bumps(32, 4, 2, 0.5);
    const Grid g = lo.grid;
    const Field zero = Field::zeros(g);
    CHECK(step_explicit(zero, 1e-3, e).values == zero.values);

    Field hi = lo;
    const Field extra = padded_bumps(32, 9, 2, 0.3);
    for (std::size_t i = 0; i < hi.values.size(); ++i) hi.values[i] += extra.values[i];

    const double m0 = mass(lo);
    Field a = lo;
    for (int k = 0; k < 200; ++k) a = step_explicit(a, cfl_dt(a, e, 0.4), e);
    CHECK(std::abs(mass(a) - m0) <= 1e-12 * m0);

    SolverConfig cfg;
    const ComparisonResult cmp = compare_ordered_pair(lo, hi, e, cfg, 100, 0.0);
    CHECK(cmp.violations == 0);
    CHECK(cmp.max_excess == 0.0);
    CHECK(cmp.steps == 100);
}

TEST_CASE("single-pass explicit evaluation")
{
    const auto e = derive_exponents(std::vector<double>{2.2, 2.5, 2.8});
    const Field u = padded_bumps(24, 7, 3, 0.8);
    const ExplicitEvaluation ev = evaluate_explicit(u, e, 0.4);
    CHECK(ev.dt == cfl_dt(u, e, 0.4));
    CHECK(ev.divergence.values == flux_divergence(u, e).values);
    const Field stepped = step_explicit(u, ev.dt, e);
    for (std::size_t i = 0; i < u.values.size(); ++i)
        CHECK(stepped.values[i] == u.values[i] + ev.dt * ev.divergence.values[i]);
    CHECK(std::isinf(evaluate_explicit(Field::zeros(u.grid), e, 0.4).dt));
}

TEST_CASE("explicit results do not depend on the thread count")
{
    const auto e = derive_exponents(std::vector<double>{2.1, 2.2, 2.3});
    const Grid g = Grid::cube(3, 24, -1.0, 1.0);
    const Field u = bump_field(g, 12);
    set_thread_count(1);
    const Field a = step_explicit(u, cfl_dt(u, e, 0.4), e);
    const double ea = energy(u, e);
    set_thread_count(8);
    const Field b = step_explicit(u, cfl_dt(u, e, 0.4), e);
    const double eb = energy(u, e);
    set_thread_count(1);
    CHECK(a.values == b.values);
    CHECK(ea == eb);
}

TEST_CASE("energy homogeneity")
{
    const Grid g = Grid::cube(3, 16, -1.0, 1.0);
    const Field u = bump_field(g, 2);
    Field cu = u;
    for (double& v : cu.values) v *= 1.7;
    const auto iso = derive_exponents(std::vector<double>{2.5, 2.5, 2.5});
    CHECK(energy(cu, iso) == doctest::Approx(std::pow(1.7, 2.5) * energy(u, iso)).epsilon(1e-12));

    const std::vector<double> p = {2.2, 2.5, 2.8};
    CHECK(energy(cu, derive_exponents(p)) == doctest::Approx(oracle::energy(cu, p)).epsilon(1e-12));
}

TEST_CASE("implicit scheme")
{
    const auto e = derive_exponents(std::vector<double>{2.5, 2.5, 2.5});
    const Grid g = Grid::cube(3, 16, -1.0, 1.0);
    SolverConfig cfg;
    cfg.scheme = Scheme::implicit_prox;

    SUBCASE("zero is a fixed point")
    {
        const Field z = Field::zeros(g);
        CHECK(step_implicit(z, 0.1, e, cfg).values == z.values);
    }
    SUBCASE("vanishing step returns the datum")
    {
        const Field u = bump_field(g, 3);
        double prev = INFINITY;
        for (double dt : {1e-3, 1e-4, 1e-5}) {
            const double d = l2_dist(step_implicit(u, dt, e, cfg), u);
            CHECK(d < prev);
            prev = d;
        }
        CHECK(prev <= 1e-5 * 100.0);
    }
    SUBCASE("discrete energy dissipation inequality")
    {
        Field u = padded_bumps(16, 5, 3, 1.0);
        for (int k = 0; k < 5; ++k) {
            ImplicitStats st;
            const double dt = 1e-2;
            const Field v = step_implicit(u, dt, e, cfg, &st);
            CHECK(st.relative_gradient <= cfg.min_tol);
            const double lhs = energy(v, e) + l2_dist(v, u) * l2_dist(v, u) / (2.0 * dt);
            CHECK(lhs <= energy(u, e) * (1.0 + 1e-9));
            CHECK(std::abs(mass(v) - mass(u)) <= 10.0 * cfg.min_tol * mass(u));
            u = v;
        }
    }
    SUBCASE("failure carries the last iterate")
    {
        cfg.max_inner_iters = 0;
        const Field u = bump_field(g, 6);
        try {
            step_implicit(u, 1.0, e, cfg);
            FAIL("expected ImplicitSolveError");
        } catch (const ImplicitSolveError& err) {
            CHECK(err.last_iterate().values.size() == u.values.size());
            CHECK(err.residual() > cfg.min_tol);
        }
    }
}

TEST_CASE("evolve")
{
    const auto e = derive_exponents(std::vector<double>{2.5, 2.5, 2.5});
    const Grid g = Grid::cube(3, 32, -2.0, 2.0);
    SolverConfig cfg;
    cfg.snapshot_times = {1.0, 1.2, 1.5};

    SUBCASE("zero datum")
    {
        const Trajectory traj = evolve(Field::zeros(g, 1.0), 1.0, 1.5, e, cfg);
        REQUIRE(traj.snapshots.size() == 3);
        for (const auto& s : traj.snapshots)
            for (double v : s.values) CHECK(v == 0.0);
    }
    SUBCASE("snapshots, sup and mass")
    {
        const IsotropicBarenblatt b(2.5, 3, 1e-3);
        const Trajectory traj = evolve(sample_field(b, g, 1.0), 1.0, 1.5, e, cfg);
        traj.check();
        REQUIRE(traj.times() == std::vector<double>{1.0, 1.2, 1.5});
        for (std::size_t k = 1; k < 3; ++k) {
            CHECK(traj.diagnostics[k].sup <= traj.diagnostics[k - 1].sup + 1e-10);
            CHECK(traj.diagnostics[k].mass == doctest::Approx(traj.diagnostics[0].mass).epsilon(1e-12));
            CHECK(traj.diagnostics[k].energy <= traj.diagnostics[k - 1].energy);
        }
    }
    SUBCASE("boundary contact")
    {
        const IsotropicBarenblatt b(2.5, 3, 1.0);
        try {
            evolve(sample_field(b, Grid::cube(3, 16, -1.5, 1.5), 1.0), 1.0, 50.0, e, cfg);
            FAIL("expected BoundaryContactError");
        } catch (const BoundaryContactError& err) {
            CHECK(err.time() >= 1.0);
            CHECK(err.time() < 50.0);
        }
    }
    SUBCASE("configuration validation")
    {
        SolverConfig bad;
        bad.cfl_safety = 1.5;
        CHECK_THROWS_AS(validate(bad), std::invalid_argument);
        bad = SolverConfig{};
        bad.min_tol = 0.0;
        CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    }
}
