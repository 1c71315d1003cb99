// Serial reference vs OpenMP kernels, through the objective the solver uses.

#include <benchmark/benchmark.h>

#include "fuzzreg/objective.hpp"
#include "fuzzreg/random.hpp"

using namespace fuzzreg;

namespace {

PointSet cloud(std::size_t n, std::uint64_t seed, double z_offset = 0.0) {
    Rng rng(seed);
    PointSet p;
    for (std::size_t i = 0; i < n; ++i) p.emplace_back(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5) + z_offset);
    return p;
}

KernelConfig config(Truncation tr) {
    KernelConfig c;
    c.sigma = 0.05;
    c.truncation = tr;
    return c;
}

void run(benchmark::State& state, const FuzzyObjective& obj, bool jacobian) {
    const Eigen::VectorXd x = params_from_transform(SimilarityTransform::identity(), obj.mode());
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    for (auto _ : state) {
        obj.evaluate(x, r, jacobian ? &J : nullptr);
        benchmark::DoNotOptimize(r.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(obj.source().size() * obj.target().size()));
}

// args: set size, backend (0 serial, 1 parallel), truncation (0 exact, 1 cutoff), jacobian
void BM_Points(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto backend = state.range(1) ? KernelBackend::Parallel : KernelBackend::Serial;
    const auto tr = state.range(2) ? Truncation::Cutoff : Truncation::Exact;
    FuzzyObjective obj(cloud(n, 1), TargetSet::points(cloud(n, 2)), config(tr), TransformMode::Similarity, backend);
    run(state, obj, state.range(3) != 0);
}

void BM_Rays(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto backend = state.range(1) ? KernelBackend::Parallel : KernelBackend::Serial;
    RayBundle rays;
    for (const auto& p : cloud(n, 3, 6.0)) rays.push_back(Ray::through(p));
    FuzzyObjective obj(cloud(n, 4, 6.0), TargetSet::rays(rays), config(Truncation::Exact), TransformMode::Rigid, backend);
    run(state, obj, state.range(2) != 0);
}

}  // namespace

BENCHMARK(BM_Points)
    ->ArgNames({"n", "parallel", "cutoff", "jac"})
    ->ArgsProduct({{500, 2000}, {0, 1}, {0, 1}, {0, 1}})
    ->Unit(benchmark::kMillisecond);

BENCHMARK(BM_Rays)
    ->ArgNames({"n", "parallel", "jac"})
    ->ArgsProduct({{500, 2000}, {0, 1}, {0, 1}})
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
