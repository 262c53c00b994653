#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "dtsn/cost_model.hpp"
#include "dtsn/fl_baseline.hpp"
#include "dtsn/protocol.hpp"
#include "dtsn/scenario_io.hpp"
#include "dtsn/toy_model.hpp"

namespace {

dtsn::io::ScenarioDoc bundled_doc() {
    static dtsn::io::ScenarioDoc doc =
        dtsn::io::load_scenario(std::string(DTSN_SCENARIO_DIR) + "/paper_preset.json");
    return doc;
}

// Corpus around the fit budget's working size: many distinct keys, a few
// repeated observations each.
std::vector<dtsn::toy::TrainingPair> large_corpus() {
    std::vector<dtsn::toy::TrainingPair> pairs;
    for (int key = 0; key < 400; ++key)
        for (int obs = 0; obs < 4; ++obs)
            pairs.push_back({"sensor " + std::to_string(key) + " reading",
                             "level " + std::to_string((key + obs) % 7), false});
    return pairs;
}

void paradigm_totals(benchmark::State& state) {
    dtsn::cost::Scenario sc = bundled_doc().scenario;
    for (auto _ : state) {
        benchmark::DoNotOptimize(dtsn::cost::fl_total(sc));
        benchmark::DoNotOptimize(dtsn::cost::lt_total(sc));
    }
}
BENCHMARK(paradigm_totals);

void paradigm_compare(benchmark::State& state) {
    dtsn::cost::Scenario sc = bundled_doc().scenario;
    for (auto _ : state) benchmark::DoNotOptimize(dtsn::cost::compare(sc));
}
BENCHMARK(paradigm_compare);

void fit_large_corpus(benchmark::State& state) {
    dtsn::toy::ToyModel base = dtsn::toy::make_reference_base(200000);
    std::vector<dtsn::toy::TrainingPair> pairs = large_corpus();
    for (auto _ : state)
        benchmark::DoNotOptimize(dtsn::toy::fit_delta(base, pairs, 0.01));
}
BENCHMARK(fit_large_corpus);

void merge_delta(benchmark::State& state) {
    dtsn::toy::ToyModel base = dtsn::toy::make_reference_base(2000);
    dtsn::toy::Delta delta = dtsn::toy::fit_delta(base, large_corpus(), 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(dtsn::toy::merge(base, delta));
}
BENCHMARK(merge_delta);

void generate_answer(benchmark::State& state) {
    dtsn::toy::ToyModel base = dtsn::toy::make_reference_base(2000);
    dtsn::toy::Delta delta = dtsn::toy::fit_delta(base, large_corpus(), 1.0);
    dtsn::toy::ToyModel merged = dtsn::toy::merge(base, delta);
    for (auto _ : state)
        benchmark::DoNotOptimize(dtsn::toy::generate(merged, "sensor 123 reading", {}));
}
BENCHMARK(generate_answer);

void semantic_tick(benchmark::State& state) {
    dtsn::io::ScenarioDoc doc = bundled_doc();
    for (auto _ : state) {
        dtsn::sim::Simulation sim(doc.scenario, doc.entities, doc.params,
                                  dtsn::sim::Paradigm::semantic);
        sim.run_ticks(1);
        benchmark::DoNotOptimize(sim.events().size());
    }
}
BENCHMARK(semantic_tick);

void federated_round(benchmark::State& state) {
    std::vector<dtsn::fl::LocalDataset> data =
        dtsn::fl::make_synthetic({10, 32, 8, 0.05}, 1);
    dtsn::fl::WeightVector w;
    w.values.assign(8, 0.0);
    for (auto _ : state) {
        std::vector<std::pair<dtsn::fl::WeightVector, std::size_t>> updates;
        for (const dtsn::fl::LocalDataset& d : data)
            updates.emplace_back(dtsn::fl::local_update(w, d, 0.02), d.samples.size());
        benchmark::DoNotOptimize(dtsn::fl::global_aggregate(updates));
    }
}
BENCHMARK(federated_round);

} // namespace

BENCHMARK_MAIN();
