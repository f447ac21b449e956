// Microbenchmarks for the hot paths: divergence kernels, signature
// construction, flattening, and the end-to-end search metrics.
#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>
#include <vector>

#include "mscout/lsh.hpp"
#include "mscout/metrics.hpp"
#include "mscout/registry.hpp"
#include "mscout/search.hpp"
#include "mscout/sketch.hpp"
#include "mscout/workload.hpp"

using namespace mscout;

namespace {

std::vector<double> random_dist(std::mt19937_64& rng, std::size_t dim) {
    std::uniform_real_distribution<double> unit(0.01, 1.0);
    std::vector<double> weights(dim);
    for (auto& w : weights) w = unit(rng);
    return weights;
}

void BM_JsDivergence(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto dim = static_cast<std::size_t>(state.range(0));
    const auto p = ProbabilityVector::from_weights(random_dist(rng, dim));
    const auto q = ProbabilityVector::from_weights(random_dist(rng, dim));
    for (auto _ : state) {
        benchmark::DoNotOptimize(js_divergence(p, q));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_JsDivergence)->Arg(16)->Arg(64)->Arg(256)->Arg(1024);

void BM_MinHashSignature(benchmark::State& state) {
    std::mt19937_64 rng(2);
    const auto tokens = static_cast<std::uint64_t>(state.range(0));
    TokenMultiset multiset;
    for (std::uint64_t i = 0; i < tokens; ++i) {
        multiset.items.push_back({rng(), 1 + rng() % 5});
    }
    std::sort(multiset.items.begin(), multiset.items.end());
    const MinHashParams params;
    for (auto _ : state) {
        benchmark::DoNotOptimize(minhash_signature(multiset, params));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(tokens));
}
BENCHMARK(BM_MinHashSignature)->Arg(32)->Arg(256)->Arg(2048);

void BM_JsLshSignature(benchmark::State& state) {
    std::mt19937_64 rng(3);
    const auto dim = static_cast<std::size_t>(state.range(0));
    const auto p = ProbabilityVector::from_weights(random_dist(rng, dim));
    std::vector<std::uint64_t> labels(dim);
    for (std::size_t i = 0; i < dim; ++i) labels[i] = rng();
    const JsLshParams params;
    for (auto _ : state) {
        benchmark::DoNotOptimize(jslsh_signature(p, labels, params));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(dim));
}
BENCHMARK(BM_JsLshSignature)->Arg(16)->Arg(64)->Arg(256);

const std::vector<DatasetSketch>& corpus_sketches() {
    static const std::vector<DatasetSketch> sketches = [] {
        WorkloadSpec spec;
        spec.families = 8;
        spec.datasets_per_family = 4;
        spec.features = 8;
        spec.bins = 32;
        spec.rows = 2500;
        std::vector<DatasetSketch> out;
        for (const auto& dataset : generate_workload(spec)) {
            IngestOptions options;
            options.dataset_id = dataset.dataset_id;
            options.partition_size_m = 500;
            options.bins_per_numeric_feature = spec.bins;
            out.push_back(ingest_table(dataset.table, options));
        }
        return out;
    }();
    return sketches;
}

RegistryParams corpus_params() {
    RegistryParams params;
    params.partition_size_m = 500;
    params.bins_per_numeric_feature = 32;
    return params;
}

void BM_Flatten(benchmark::State& state) {
    const DatasetSketch& sketch = corpus_sketches().front();
    const auto features = sketch.feature_ids();
    std::size_t partition = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            flatten(sketch, sketch.partitions[partition], features));
        partition = (partition + 1) % sketch.partitions.size();
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Flatten);

void BM_RegisterModel(benchmark::State& state) {
    const auto& sketches = corpus_sketches();
    for (auto _ : state) {
        Registry registry(corpus_params());
        for (const auto& sketch : sketches) {
            ModelRecord record;
            record.model_id = "m-" + sketch.dataset_id;
            registry.register_model(record, sketch);
        }
        benchmark::DoNotOptimize(registry.size());
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(sketches.size()));
}
BENCHMARK(BM_RegisterModel);

SearchConfig bench_config(SearchMetric metric, bool exact) {
    SearchConfig config;
    config.metric = metric;
    config.t1 = -1.0;
    config.t2 = 0.0;
    config.t_adaptivity = 0.0;
    config.t_js = metric == SearchMetric::js ? kMaxJsDivergence : 0.1;
    config.exact_rescoring = exact;
    config.top = 0;
    return config;
}

void run_search_bench(benchmark::State& state, SearchMetric metric, bool exact) {
    const auto& sketches = corpus_sketches();
    static Registry registry = [] {
        Registry out(corpus_params());
        for (const auto& sketch : corpus_sketches()) {
            ModelRecord record;
            record.model_id = "m-" + sketch.dataset_id;
            out.register_model(record, sketch);
        }
        return out;
    }();
    static SearchEngine engine(registry);
    const SearchConfig config = bench_config(metric, exact);
    (void)engine.search(sketches.front(), config);  // warm signature caches
    std::size_t next = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(engine.search(sketches[next], config));
        next = (next + 1) % sketches.size();
    }
    state.SetItemsProcessed(state.iterations());
}

void BM_SearchOverlap(benchmark::State& state) {
    run_search_bench(state, SearchMetric::overlap, false);
}
BENCHMARK(BM_SearchOverlap);

void BM_SearchAdaptivityBanded(benchmark::State& state) {
    run_search_bench(state, SearchMetric::adaptivity, false);
}
BENCHMARK(BM_SearchAdaptivityBanded);

void BM_SearchAdaptivityExact(benchmark::State& state) {
    run_search_bench(state, SearchMetric::adaptivity, true);
}
BENCHMARK(BM_SearchAdaptivityExact);

void BM_SearchJsExact(benchmark::State& state) {
    run_search_bench(state, SearchMetric::js, true);
}
BENCHMARK(BM_SearchJsExact);

} // namespace

BENCHMARK_MAIN();
