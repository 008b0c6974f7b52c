#include <benchmark/benchmark.h>

#include <random>

#include "spde/ensemble.hpp"
#include "spde/kernels.hpp"

using namespace spde;

namespace {

struct DiffusionCase {
    Grid g;
    Field y;
    std::array<Field, 2> drift;
    std::vector<double> alpha, k;

    explicit DiffusionCase(int n)
        : g(Grid::make_2d(1.0, 1.0, n, n, {1.0, 1.0}, {n, n})), y(g), drift{Field(g), Field(g)} {
        std::mt19937_64 gen(1);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (double& v : y.values())
            v = u(gen);
        for (auto& f : drift)
            for (double& v : f.values())
                v = 2.0 * u(gen) - 1.0;
        const std::size_t nb = boundary_faces(g).size() * g.age_nodes();
        alpha.assign(nb, 0.3);
        k.assign(nb, 0.05);
    }
};

void BM_DiffusionParallel(benchmark::State& state) {
    const DiffusionCase c(static_cast<int>(state.range(0)));
    const DiffusionOperator op(c.g);
    for (auto _ : state)
        benchmark::DoNotOptimize(op.apply(c.y, c.alpha, c.k, &c.drift, 0.01));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(c.y.size()));
}

void BM_DiffusionSerial(benchmark::State& state) {
    const DiffusionCase c(static_cast<int>(state.range(0)));
    const DiffusionOperator op(c.g);
    for (auto _ : state)
        benchmark::DoNotOptimize(op.apply_serial(c.y, c.alpha, c.k, &c.drift, 0.01));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(c.y.size()));
}

RunConfig ensemble_config(int workers) {
    RunConfig c;
    c.model.grid = Grid::make_1d(0.5, 1.0, 16, 32, 1.0, 16);
    c.model.rates = make_separable_rates(RateFamily::logistic(0.2, 1.0, 2.0, 1.0), {},
                                         RateFamily::logistic(1.5, 0.5, 2.0, 1.0), {}, 1.0, 0.2,
                                         0.0, Region::whole(c.model.grid));
    c.model.noise.amplitudes.push_back(Amplitude::constant(0.3));
    c.model.initial = {1.0, 1.0, 0.3};
    c.model.solver.snapshot_stride = 16;
    c.paths = 64;
    c.workers = workers;
    return c;
}

void BM_Ensemble(benchmark::State& state) {
    const RunConfig c = ensemble_config(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(run(c));
    state.SetItemsProcessed(state.iterations() * c.paths);
}

} // namespace

BENCHMARK(BM_DiffusionParallel)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DiffusionSerial)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Ensemble)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
