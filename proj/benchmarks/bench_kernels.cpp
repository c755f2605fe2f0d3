#include <benchmark/benchmark.h>

#include <random>

#include "pelvseg/components.hpp"
#include "pelvseg/distance.hpp"
#include "pelvseg/metrics.hpp"
#include "pelvseg/phantom.hpp"
#include "pelvseg/postproc.hpp"

using namespace pelvseg;

namespace {

BinaryMask noise(std::size_t side, double density, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(density);
    const Dims d{side, side, side};
    std::vector<std::uint8_t> bits(d.voxel_count());
    for (auto& b : bits) {
        b = coin(rng) ? 1 : 0;
    }
    return {d, {}, std::move(bits)};
}

// First suite scene with two far outliers, generated once.
const phantom::Phantom& scene() {
    static const phantom::Phantom ph = phantom::generate(phantom::standard_suite().at(5));
    return ph;
}

void BM_SquaredEdt(benchmark::State& state) {
    const auto side = static_cast<std::size_t>(state.range(0));
    const auto m = noise(side, 0.01, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(squared_edt(m));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.dims().voxel_count()));
}
BENCHMARK(BM_SquaredEdt)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_LabelComponents(benchmark::State& state) {
    const auto side = static_cast<std::size_t>(state.range(0));
    const auto conn = static_cast<Connectivity>(state.range(1));
    const auto m = noise(side, 0.3, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(label_components(m, conn));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.dims().voxel_count()));
}
BENCHMARK(BM_LabelComponents)
    ->ArgsProduct({{64, 128}, {static_cast<int>(Connectivity::Face6), static_cast<int>(Connectivity::Vertex26)}})
    ->Unit(benchmark::kMillisecond);

void BM_SdfFilter(benchmark::State& state) {
    FilterConfig cfg;
    cfg.threshold = static_cast<double>(state.range(0));
    const auto& ph = scene();
    for (auto _ : state) {
        benchmark::DoNotOptimize(sdf_filter(ph.pred, cfg));
    }
}
BENCHMARK(BM_SdfFilter)->Arg(5)->Arg(35)->Unit(benchmark::kMillisecond);

void BM_McrFilter(benchmark::State& state) {
    const auto& ph = scene();
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcr_filter(ph.pred));
    }
}
BENCHMARK(BM_McrFilter)->Unit(benchmark::kMillisecond);

void BM_Hausdorff(benchmark::State& state) {
    const auto& ph = scene();
    const auto p = foreground_mask(ph.pred);
    const auto g = foreground_mask(ph.gt);
    for (auto _ : state) {
        benchmark::DoNotOptimize(hausdorff(p, g));
    }
}
BENCHMARK(BM_Hausdorff)->Unit(benchmark::kMillisecond);

void BM_EvaluateCase(benchmark::State& state) {
    const auto& ph = scene();
    for (auto _ : state) {
        benchmark::DoNotOptimize(evaluate_case(ph.pred, ph.gt));
    }
}
BENCHMARK(BM_EvaluateCase)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
