#include <random>

#include <benchmark/benchmark.h>

#include "gprompt/gnn.hpp"
#include "gprompt/properties.hpp"
#include "gprompt/synth.hpp"
#include "gprompt/trainer.hpp"

namespace {

using namespace gprompt;

Dataset bench_data(std::size_t n_graphs, std::size_t nodes, std::size_t dim) {
  SynthConfig sc;
  sc.n_graphs = n_graphs;
  sc.nodes_per_graph = nodes;
  sc.feature_dim = dim;
  return synth_shift_dataset(sc);
}

void BM_Forward(benchmark::State& state) {
  const auto kind = state.range(0) == 0 ? GnnKind::gcn : GnnKind::gat;
  const auto n = static_cast<std::size_t>(state.range(1));
  Dataset ds = bench_data(1, n, 16);
  GnnModel m(ModelSpec{kind, 16, 64, 2, ds.num_classes, 0.2}, 0);
  for (auto _ : state) benchmark::DoNotOptimize(m.forward(ds.graphs[0]).data().data());
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_Forward)->ArgsProduct({{0, 1}, {16, 64, 256}});

void BM_ForwardBackward(benchmark::State& state) {
  const auto kind = state.range(0) == 0 ? GnnKind::gcn : GnnKind::gat;
  Dataset ds = bench_data(1, static_cast<std::size_t>(state.range(1)), 16);
  GnnModel m(ModelSpec{kind, 16, 64, 2, ds.num_classes, 0.2}, 0);
  for (auto _ : state) {
    Tensor loss = softmax_cross_entropy(m.forward(ds.graphs[0]), {*ds.graphs[0].y});
    loss.backward();
    for (auto& [name, t] : m.parameters()) t.zero_grad();
  }
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_ForwardBackward)->ArgsProduct({{0, 1}, {16, 64, 256}});

void BM_PageRank(benchmark::State& state) {
  Dataset ds = bench_data(1, static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(pagerank(ds.graphs[0]).data());
}
BENCHMARK(BM_PageRank)->Arg(100)->Arg(500)->Arg(1000);

void BM_PromptStep(benchmark::State& state) {
  Dataset ds = bench_data(32, 16, 16);
  GnnModel m(ModelSpec{GnnKind::gcn, 16, 64, 2, ds.num_classes, 0.2}, 0);
  PromptConfig pc;
  pc.n_t = static_cast<std::size_t>(state.range(0));
  PromptTrainer trainer(m, pc);
  std::vector<const Graph*> batch;
  for (const auto& g : ds.graphs) batch.push_back(&g);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step(batch).l_c);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_PromptStep)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
