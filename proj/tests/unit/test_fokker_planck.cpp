#include "apde/fokker_planck.hpp"
#include "apde/harness.hpp"

#include <doctest.h>

#include <cmath>

using namespace apde;

namespace {

const ExponentData& iso()
{
    static const ExponentData e = derive_exponents(std::vector<double>{2.5, 2.5, 2.5});
    return e;
}

BarenblattProfile profile_from(const Field& w)
{
    BarenblattProfile p;
    p.w = w;
    p.exps = iso();
    p.mass = mass(w);
    p.sup = sup_inf(w).sup;
    return p;
}

} // namespace

TEST_CASE("rescaled semigroup")
{
    const Grid g = Grid::cube(3, 32, -2.0, 2.0);
    const IsotropicBarenblatt b(2.5, 3, 1e-3);
    const Field g0 = sample_field(b, g, 1.0);
    SolverConfig cfg;

    SUBCASE("s = 0 returns the datum")
    {
        const Field out = semigroup_tilde(g0, 0.0, iso(), cfg);
        CHECK(out.values == g0.values);
        CHECK(out.time == 0.0);
    }
    SUBCASE("mass, positivity and order")
    {
        const Field out = semigroup_tilde(g0, 0.5, iso(), cfg);
        CHECK(std::abs(mass(out) - mass(g0)) <= 0.01 * mass(g0));
        CHECK(sup_inf(out).inf >= 0.0);
        CHECK(sup_inf(out).sup <= sup_inf(g0).sup * (1.0 + 1e-10));

        const Field renorm = semigroup_tilde(g0, 0.5, iso(), cfg, true);
        CHECK(mass(renorm) == doctest::Approx(mass(g0)).epsilon(1e-12));

        Field lower = g0;
        for (double& v : lower.values) v *= 0.5;
        const Field out_lower = semigroup_tilde(lower, 0.5, iso(), cfg);
        for (std::size_t i = 0; i < out.values.size(); ++i)
            REQUIRE(out_lower.values[i] <= out.values[i] + 10.0 * cfg.min_tol);
    }
    SUBCASE("the exact self-similar profile is nearly stationary")
    {
        const Field out = semigroup_tilde(g0, 0.5, iso(), cfg);
        CHECK(l1_distance(out, g0) / mass(g0) <= 0.05);
    }
    CHECK_THROWS_AS(semigroup_tilde(g0, -1.0, iso(), cfg), std::invalid_argument);
}

TEST_CASE("Barenblatt family evaluation")
{
    const Grid g = Grid::cube(3, 24, -2.0, 2.0);
    const IsotropicBarenblatt b(2.5, 3, 1e-3);
    const BarenblattProfile prof = profile_from(sample_field(b, g, 1.0));

    SUBCASE("lambda = 1, t = 1 gives w at the cell centres")
    {
        const Field s = sample_barenblatt(prof, 1.0, 1.0, g);
        for (std::size_t i = 0; i < s.values.size(); ++i)
            CHECK(std::abs(s.values[i] - prof.w.values[i]) <= 1e-15 + 1e-12 * prof.w.values[i]);
    }
    SUBCASE("sup and support bounds")
    {
        const double lambda = 1.3;
        const double t = 2.0;
        const Field s = sample_barenblatt(prof, lambda, t, Grid::cube(3, 32, -3.0, 3.0));
        CHECK(sup_inf(s).sup <= lambda * std::pow(t, -iso().alpha) * prof.sup * (1.0 + 1e-12));
        const SupportBox wb = support_box(prof.w, 0.0);
        const SupportBox sb = support_box(s, 0.0);
        for (std::size_t a = 0; a < 3; ++a) {
            const double scale = std::pow(lambda, (iso().p[a] - 2.0) / iso().p[a]) * std::pow(t, iso().alpha_i[a]);
            const double cell = s.grid.spacing[a];
            CHECK(sb.hi[a] <= scale * wb.hi[a] + cell);
            CHECK(sb.lo[a] >= scale * wb.lo[a] - cell);
        }
    }
    CHECK_THROWS_AS(eval_barenblatt(prof, 1.0, std::vector<double>{0, 0, 0}, 0.0), std::invalid_argument);
    CHECK(eval_barenblatt(prof, 1.0, std::vector<double>{5.0, 0.0, 0.0}, 1.0) == 0.0);
}

TEST_CASE("self-similarity residual")
{
    const Grid g = Grid::cube(3, 32, -2.0, 2.0);
    const IsotropicBarenblatt b(2.5, 3, 1e-3);
    const BarenblattProfile prof = profile_from(sample_field(b, g, 1.0));
    CHECK(self_similarity_residual(prof, 1.0, 1.0, g) == 0.0);
    CHECK(self_similarity_residual(prof, 2.0, std::pow(2.0, -2.0), g) <= 0.05);
    CHECK(self_similarity_residual(prof, 0.5, std::pow(0.5, -2.0), g) <= 0.05);
}

TEST_CASE("eta estimate")
{
    SUBCASE("indicator of K_1")
    {
        const Grid g = Grid::cube(3, 40, -2.0, 2.0);
        Field w = Field::zeros(g);
        const auto st = g.strides();
        for (std::size_t i = 0; i < g.size(); ++i) {
            bool in = true;
            for (std::size_t a = 0; a < 3; ++a) in = in && std::abs(g.center(a, (i / st[a]) % 40)) < 0.5;
            if (in) w.values[i] = 1.0;
        }
        const EtaEstimate est = estimate_eta(w);
        CHECK(est.warning.empty());
        CHECK(std::abs(est.eta - 0.5) <= g.spacing[0]);
    }
    SUBCASE("zero field")
    {
        const EtaEstimate est = estimate_eta(Field::zeros(Grid::cube(3, 8, -1.0, 1.0)));
        CHECK(est.eta == 0.0);
        CHECK_FALSE(est.warning.empty());
    }
}

TEST_CASE("fixed-point builder")
{
    const Grid g = Grid::cube(3, 30, -2.5, 2.5);
    FixedPointConfig cfg;
    cfg.eps0 = 1e-3;
    cfg.tol = 2e-3;

    SUBCASE("coarse build converges and is a profile in X_{1,1}")
    {
        const BarenblattProfile prof = build_barenblatt(iso(), cfg, g);
        CHECK(prof.residual <= cfg.tol);
        CHECK(prof.residual == prof.residual_history.back());
        CHECK(prof.iterations == static_cast<int>(prof.residual_history.size()));
        CHECK(prof.mass == doctest::Approx(cfg.eps0).epsilon(1e-10));
        CHECK(prof.sup <= 1.0);
        CHECK(sup_inf(prof.w).inf >= 0.0);
        CHECK(prof.eta_bar > 0.0);
        const Field again = semigroup_tilde(prof.w, cfg.s_bar, iso(), cfg.solver, true);
        CHECK(l1_distance(again, prof.w) / prof.mass == doctest::Approx(prof.residual));
    }
    SUBCASE("iteration budget exhausted")
    {
        cfg.tol = 1e-12;
        cfg.max_iters = 2;
        try {
            build_barenblatt(iso(), cfg, g);
            FAIL("expected FixedPointError");
        } catch (const FixedPointError& err) {
            CHECK(err.residual_history().size() == 2);
        }
    }
    SUBCASE("preconditions")
    {
        CHECK_THROWS_AS(build_barenblatt(iso(), cfg, Grid::cube(3, 24, -1.5, 1.5)), std::invalid_argument);
        CHECK_THROWS_AS(build_barenblatt(derive_exponents(std::vector<double>{2.1, 2.1}), cfg, Grid::cube(2, 24, -2, 2)),
                        std::invalid_argument);
        cfg.eps0 = 10.0;
        CHECK_THROWS_AS(build_barenblatt(iso(), cfg, g), std::invalid_argument);
        cfg.eps0 = -1.0;
        CHECK_THROWS_AS(build_barenblatt(iso(), cfg, g), std::invalid_argument);
    }
}
