#include "apde/harness.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace apde;

namespace {

const ExponentData& iso()
{
    static const ExponentData e = derive_exponents(std::vector<double>{2.5, 2.5, 2.5});
    return e;
}

std::vector<double> log_times(double t0, double t1, int count)
{
    std::vector<double> t(count);
    for (int k = 0; k < count; ++k) t[k] = t0 * std::pow(t1 / t0, static_cast<double>(k) / (count - 1));
    t.back() = t1;
    return t;
}

// Second-order residual of the orthotropic equation, written independently of
// the library helper.
double fd_residual(const std::function<double(const double*, double)>& u, const double* x, double t, double p, double h)
{
    auto phi = [p](double d) { return std::pow(std::abs(d), p - 2.0) * d; };
    const double ut = (u(x, t + h) - u(x, t - h)) / (2.0 * h);
    double y[3] = {x[0], x[1], x[2]};
    const double c = u(x, t);
    double div = 0.0;
    for (int i = 0; i < 3; ++i) {
        y[i] = x[i] + h;
        const double up = u(y, t);
        y[i] = x[i] - h;
        const double dn = u(y, t);
        y[i] = x[i];
        div += (phi((up - c) / h) - phi((c - dn) / h)) / h;
    }
    return std::abs(ut - div) / std::abs(ut);
}

} // namespace

TEST_CASE("closed-form oracle solves the equation")
{
    const oracle::Barenblatt b(2.5, 3, 1e-3);
    const IsotropicBarenblatt lib(2.5, 3, 1e-3);
    const double t = 1.0;
    const double r = lib.support_radius(t);
    CHECK(r == doctest::Approx(std::pow(b.c / b.k, 0.6)));
    const double x[3] = {0.3 * r, 0.2 * r, 0.1 * r};
    auto u = [&](const double* y, double s) { return b(y, s); };

    double prev = INFINITY;
    for (double rel : {1e-2, 1e-3, 1e-4}) {
        const double res = fd_residual(u, x, t, 2.5, rel * r);
        CHECK(res < prev);
        prev = res;
    }
    CHECK(prev <= 1e-6);

    const std::vector<double> xs(x, x + 3);
    CHECK(lib(xs, t) == doctest::Approx(b(x, t)).epsilon(1e-12));
    CHECK(isotropic_barenblatt(xs, 1.7, 2.5, 3, 1e-3) == doctest::Approx(b(x, 1.7)).epsilon(1e-12));
    auto lib_fn = [&](std::span<const double> y, double s) { return lib(y, s); };
    CHECK(pde_residual(lib_fn, xs, t, 2.5, 1e-4 * r) <= 1e-6);
}

TEST_CASE("the Euclidean-radius profile is not a solution of the orthotropic equation")
{
    const oracle::Barenblatt b(2.5, 3, 1e-3);
    auto euclid = [&](const double* y, double s) {
        const double q = 2.5 / 1.5;
        const double rr = std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]) * std::pow(s, -b.alpha / 3.0);
        const double base = b.c - b.k * std::pow(rr, q);
        return base > 0.0 ? std::pow(s, -b.alpha) * std::pow(base, 3.0) : 0.0;
    };
    const double r = std::pow(b.c / b.k, 0.6);
    const double x[3] = {0.3 * r, 0.2 * r, 0.1 * r};
    CHECK(fd_residual(euclid, x, 1.0, 2.5, 1e-4 * r) > 1e-3);
}

TEST_CASE("oracle mass, support and self-similarity")
{
    const IsotropicBarenblatt b(2.5, 3, 1e-3);
    CHECK(b(std::vector<double>{b.support_radius(1.0) * 1.01, 0.0, 0.0}, 1.0) == 0.0);
    CHECK_THROWS(isotropic_barenblatt(std::vector<double>{0, 0, 0}, 0.0, 2.5, 3, 1e-3));
    CHECK_THROWS(isotropic_barenblatt(std::vector<double>{0, 0, 0}, 1.0, 2.0, 3, 1e-3));

    const Grid g = Grid::cube(3, 96, -2.0, 2.0);
    const double m1 = mass(sample_field(b, g, 1.0));
    const double m2 = mass(sample_field(b, g, 2.0));
    CHECK(m1 == doctest::Approx(1e-3).epsilon(5e-3));
    CHECK(m2 == doctest::Approx(m1).epsilon(5e-3));

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const double rho = std::exp(unit(rng));
        const ScaleTransform tr = ScaleTransform::mass_preserving(rho, iso());
        const std::vector<double> z = {unit(rng), unit(rng), unit(rng), 1.0 + 0.5 * unit(rng)};
        const auto tz = transform_point(tr, z, iso());
        const double direct = b(std::span<const double>(z.data(), 3), z[3]);
        const double mapped = b(std::span<const double>(tz.data(), 3), tz[3]) / tr.theta;
        const double scale = std::max(direct, 1e-300);
        if (direct > 0.0) worst = std::max(worst, std::abs(mapped - direct) / scale);
        else CHECK(mapped <= 1e-300);
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("support growth fit on the exact trajectory")
{
    const IsotropicBarenblatt b(2.5, 3, 1e-3);
    const Grid g = Grid::cube(3, 96, -2.75, 2.75);
    const auto times = log_times(1.0, 10.0, 13);
    const Trajectory traj = oracle_trajectory(b, g, times, iso());
    const SupportGrowthReport rep = check_support_growth(traj, iso());
    for (double err : rep.relative_errors) CHECK(std::abs(err) <= 0.05);
    CHECK(rep.points_used >= 5);

    Trajectory zero;
    for (double t : times) {
        zero.snapshots.push_back(Field::zeros(Grid::cube(3, 8, -1.0, 1.0), t));
        DiagnosticsRow row;
        row.t = t;
        row.half_widths = {0.0, 0.0, 0.0};
        zero.diagnostics.push_back(row);
    }
    CHECK_THROWS_AS(check_support_growth(zero, iso()), DegenerateFitError);

    Trajectory short_traj = traj;
    short_traj.snapshots.resize(5);
    short_traj.diagnostics.resize(5);
    CHECK_THROWS_AS(check_support_growth(short_traj, iso()), std::invalid_argument);
}

TEST_CASE("Harnack probe")
{
    const IsotropicBarenblatt b(2.5, 3, 1e-3);
    const Grid g = Grid::cube(3, 32, -2.75, 2.75);
    const Trajectory traj = oracle_trajectory(b, g, log_times(1.0, 4.0, 13), iso());
    const std::vector<double> rho = {0.1, 0.15};
    const std::vector<ProbePoint> probes = {{{0.0, 0.0, 0.0}, 2.0}, {{0.3, 0.0, 0.0}, 2.0}, {{2.5, 2.5, 0.0}, 2.0}};
    const HarnackReport rep = harnack_probe(traj, iso(), 1.0, 1.0, rho, probes);

    CHECK(rep.retained == 4);
    REQUIRE(rep.skipped.size() == 2);
    for (const auto& s : rep.skipped) CHECK(s.probe == 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(std::isfinite(rep.ratios_fwd[i][k]));
            CHECK(std::isfinite(rep.ratios_bwd[i][k]));
        }
    CHECK(std::isnan(rep.ratios_fwd[2][0]));
    CHECK(rep.empirical_C3 >= 1.0);

    SUBCASE("joint scaling of trajectory, probes and radii")
    {
        const ScaleTransform tr{1.3, 0.7};
        const Trajectory mapped = transform_trajectory(traj, tr, iso());
        const ScaleFactors f = scale_factors(tr, iso());
        std::vector<ProbePoint> mp;
        for (const auto& p : probes) {
            ProbePoint q;
            for (std::size_t a = 0; a < 3; ++a) q.x.push_back(p.x[a] / f.space[a]);
            q.t = p.t / f.time;
            mp.push_back(q);
        }
        std::vector<double> mrho;
        for (double r : rho) mrho.push_back(r / tr.rho);
        const HarnackReport rep2 = harnack_probe(mapped, iso(), 1.0, 1.0, mrho, mp);
        CHECK(rep2.retained == rep.retained);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t k = 0; k < 2; ++k) {
                CHECK(std::abs(rep2.ratios_fwd[i][k] / rep.ratios_fwd[i][k] - 1.0) <= 1e-10);
                CHECK(std::abs(rep2.ratios_bwd[i][k] / rep.ratios_bwd[i][k] - 1.0) <= 1e-10);
            }
    }
    SUBCASE("nothing retained")
    {
        const std::vector<ProbePoint> dead = {{{2.5, 2.5, 0.0}, 2.0}};
        CHECK_THROWS_AS(harnack_probe(traj, iso(), 1.0, 1.0, rho, dead), std::invalid_argument);
    }
}

TEST_CASE("De Giorgi probe")
{
    SUBCASE("above the level everywhere")
    {
        const DeGiorgiProbe p = degiorgi_probe([](std::span<const double>, double) { return 1.0; }, 3, 0.5);
        CHECK(p.mu_observed == 0.0);
        CHECK(p.implication_holds);
    }
    SUBCASE("zero function")
    {
        const DeGiorgiProbe p = degiorgi_probe([](std::span<const double>, double) { return 0.0; }, 3, 0.5);
        CHECK(p.mu_observed == 1.0);
        CHECK(p.inf_half == 0.0);
        CHECK_FALSE(p.implication_holds);
    }
    SUBCASE("half space")
    {
        const DeGiorgiProbe p =
            degiorgi_probe([](std::span<const double> y, double) { return y[0] < 0.0 ? 0.0 : 1.0; }, 3, 0.5, {8, 4});
        CHECK(p.mu_observed == doctest::Approx(0.5));
        CHECK_FALSE(p.implication_holds);
    }
    SUBCASE("trajectory window and corpus statistic")
    {
        const IsotropicBarenblatt b(2.5, 3, 1e-3);
        const Trajectory traj = oracle_trajectory(b, Grid::cube(3, 24, -2.0, 2.0), log_times(1.0, 2.0, 5), iso());
        const double u0 = b(std::vector<double>{0.0, 0.0, 0.0}, 2.0);
        const std::vector<double> x0 = {0.0, 0.0, 0.0};
        std::vector<DeGiorgiProbe> corpus;
        for (double a : {0.25, 0.5, 1.0}) {
            const ScaleTransform window{0.2, u0};
            corpus.push_back(degiorgi_probe(traj, iso(), x0, 2.0, window, a, {6, 6}));
        }
        CHECK(corpus[0].implication_holds);
        const auto best = largest_mu_with_implication(corpus);
        REQUIRE(best.has_value());
        CHECK(*best >= corpus[0].mu_observed);
    }
    CHECK_THROWS_AS(degiorgi_probe([](std::span<const double>, double) { return 0.0; }, 3, 0.0), std::invalid_argument);
}

TEST_CASE("cluster search")
{
    const Grid g = Grid::cube(3, 16, 0.0, 1.0);
    SUBCASE("constant one gives the full cube")
    {
        Field u = Field::zeros(g);
        std::fill(u.values.begin(), u.values.end(), 1.0);
        const ClusterResult r = cluster_search(u, 0.8, 0.1, 0.5, 1.0);
        REQUIRE(r.cube.has_value());
        CHECK(r.cube->depth == 0);
        CHECK(r.hypothesis_holds);
    }
    SUBCASE("zero gives none")
    {
        const ClusterResult r = cluster_search(Field::zeros(g), 0.5, 0.1, 0.5, 1.0);
        CHECK_FALSE(r.cube.has_value());
        CHECK_FALSE(r.hypothesis_holds);
    }
    SUBCASE("left half indicator, verified by recount")
    {
        Field u = Field::zeros(g);
        const auto st = g.strides();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g.center(0, i / st[0]) < 0.5) u.values[i] = 1.0;
        const ClusterResult r = cluster_search(u, 1.0, 0.1, 0.1, 1.0);
        REQUIRE(r.cube.has_value());
        CHECK(r.level_fraction == doctest::Approx(0.5));
        const ClusterCube& c = *r.cube;
        CHECK(c.center[0] + 0.5 * c.edge[0] <= 0.5 + 1e-12);
        std::size_t in = 0, hit = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            bool inside = true;
            for (std::size_t a = 0; a < 3; ++a) {
                const double x = g.center(a, (i / st[a]) % 16);
                const double lo = c.center[a] - 0.5 * c.edge[a];
                inside = inside && x >= lo && x < lo + c.edge[a];
            }
            if (!inside) continue;
            ++in;
            if (u.values[i] >= 1.0) ++hit;
        }
        REQUIRE(in > 0);
        CHECK(static_cast<double>(hit) / static_cast<double>(in) == doctest::Approx(c.fraction));
        CHECK(c.fraction > 0.9);
    }
}

TEST_CASE("ordered pair under the implicit scheme")
{
    const auto e = derive_exponents(std::vector<double>{2.5, 2.5, 2.5});
    const Grid g = Grid::cube(3, 12, -1.0, 1.0);
    std::mt19937_64 rng(33);
    const Field lo = random_bump_field(g, rng, 2, 0.2, 0.5);
    Field hi = lo;
    const Field add = random_bump_field(g, rng, 1, 0.1, 0.2);
    for (std::size_t i = 0; i < hi.values.size(); ++i) hi.values[i] += add.values[i];
    SolverConfig cfg;
    cfg.scheme = Scheme::implicit_prox;
    const ComparisonResult r = compare_ordered_pair(lo, hi, e, cfg, 3, 10.0 * cfg.min_tol);
    CHECK(r.violations == 0);
}
