// Per-epoch cost on random graphs; the fitted complexity should stay linear
// in n + m.
#include <benchmark/benchmark.h>

#include "camera/graph.hpp"
#include "camera/model.hpp"
#include "camera/rng.hpp"
#include "camera/synthgen.hpp"
#include "camera/training.hpp"

using namespace camera;

namespace {

Dataset random_dataset(std::size_t n, std::size_t m, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    EdgeList edges;
    edges.reserve(m);
    for (std::size_t e = 0; e < m; ++e) {
        const NodeId u = NodeId(rng.uniform_index(n));
        NodeId v = u;
        while (v == u) v = NodeId(rng.uniform_index(n));
        edges.emplace_back(u, v);
    }
    Dataset ds;
    ds.graph = build_graph(edges, n);
    ds.features = FeatureMatrix(n, dim);
    for (auto& x : ds.features.values) x = float(rng.normal());
    return ds;
}

}  // namespace

static void BM_ModelForward(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0));
    const Dataset ds = random_dataset(n, 5 * n, 16, 1);
    const MoeModel<float> model = init_model<float>(16, 4, 2, 1);
    const Mat<float> h0 = to_mat<float>(ds.features);
    for (auto _ : state) {
        auto trace = model_forward(model, ds.graph, h0);
        benchmark::DoNotOptimize(trace.output.v.data());
    }
    state.SetComplexityN(int64_t(n + ds.graph.num_edges));
}
BENCHMARK(BM_ModelForward)->RangeMultiplier(2)->Range(2000, 32000)->Complexity(benchmark::oN);

static void BM_TrainEpoch(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0));
    const Dataset ds = random_dataset(n, 5 * n, 16, 1);
    MoeModel<float> model = init_model<float>(16, 4, 2, 1);
    const Mat<float> h0 = to_mat<float>(ds.features);
    AdamState<float> adam = AdamState<float>::sized_for(model);
    for (auto _ : state) {
        auto trace = model_forward(model, ds.graph, h0);
        auto bw = backward(model, ds.graph, trace, {});
        auto total = bw.total(1.0f, 10.0f);
        adam_step(model, total, adam, 1e-3);
        benchmark::DoNotOptimize(model.layers[0].graph.weight.v.data());
    }
    state.SetComplexityN(int64_t(n + ds.graph.num_edges));
}
BENCHMARK(BM_TrainEpoch)->RangeMultiplier(2)->Range(2000, 32000)->Complexity(benchmark::oN);

static void BM_SynthGenerate(benchmark::State& state) {
    SynthConfig config;
    config.num_nodes = std::size_t(state.range(0));
    for (auto _ : state) {
        Dataset ds = generate(config);
        benchmark::DoNotOptimize(ds.features.values.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SynthGenerate)->RangeMultiplier(2)->Range(2000, 16000)->Complexity(benchmark::oN);

BENCHMARK_MAIN();
