#include "apde/exponents.hpp"
#include "apde/geometry.hpp"
#include "apde/harness.hpp"
#include "apde/reduce.hpp"
#include "apde/solver.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

apde::Field oracle_field(std::size_t n, double p)
{
    const apde::IsotropicBarenblatt b(p, 3, 1e-3);
    return apde::sample_field(b, apde::Grid::cube(3, n, -2.0, 2.0), 1.0);
}

void BM_FluxDivergence(benchmark::State& state)
{
    const double p = static_cast<double>(state.range(1)) / 10.0;
    const apde::ExponentData e = apde::derive_exponents(std::vector<double>{p, p, p});
    const apde::Field u = oracle_field(static_cast<std::size_t>(state.range(0)), p);
    for (auto _ : state) benchmark::DoNotOptimize(apde::flux_divergence(u, e));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(u.values.size()));
}
BENCHMARK(BM_FluxDivergence)->Args({48, 25})->Args({64, 25})->Args({64, 27})->Unit(benchmark::kMillisecond);

void BM_ExplicitStep(benchmark::State& state)
{
    const apde::ExponentData e = apde::derive_exponents(std::vector<double>{2.5, 2.5, 2.5});
    apde::Field u = oracle_field(static_cast<std::size_t>(state.range(0)), 2.5);
    for (auto _ : state) {
        const double dt = apde::cfl_dt(u, e, 0.4);
        u = apde::step_explicit(u, dt, e);
    }
}
BENCHMARK(BM_ExplicitStep)->Arg(48)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ImplicitStep(benchmark::State& state)
{
    const apde::ExponentData e = apde::derive_exponents(std::vector<double>{2.5, 2.5, 2.5});
    const apde::Field u = oracle_field(static_cast<std::size_t>(state.range(0)), 2.5);
    apde::SolverConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(apde::step_implicit(u, 1e-2, e, cfg));
}
BENCHMARK(BM_ImplicitStep)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_TransformField(benchmark::State& state)
{
    const apde::ExponentData e = apde::derive_exponents(std::vector<double>{2.5, 2.5, 2.5});
    const apde::Field u = oracle_field(static_cast<std::size_t>(state.range(0)), 2.5);
    const auto t = apde::ScaleTransform::mass_preserving(1.3, e);
    apde::TransformOptions opts;
    opts.extension = apde::Extension::zero;
    for (auto _ : state) benchmark::DoNotOptimize(apde::transform_field(t, u, u.grid, e, opts));
}
BENCHMARK(BM_TransformField)->Arg(48)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_TreeSum(benchmark::State& state)
{
    std::vector<double> v(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / static_cast<double>(i + 1);
    for (auto _ : state) benchmark::DoNotOptimize(apde::tree_sum(v));
    state.SetBytesProcessed(state.iterations() * static_cast<long>(v.size() * sizeof(double)));
}
BENCHMARK(BM_TreeSum)->Arg(1 << 16)->Arg(1 << 20);

} // namespace

BENCHMARK_MAIN();
