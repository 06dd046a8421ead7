// Forward and forward+backward cost of the two backbones at WebKB scale.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "rare/gnn.hpp"
#include "rare/graph.hpp"
#include "rare/rng.hpp"

namespace {

rare::Graph random_graph(int64_t n, int64_t dim, double avg_degree, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double p = avg_degree / static_cast<double>(n - 1);
  std::vector<rare::Edge> edges;
  for (int64_t u = 0; u < n; ++u)
    for (int64_t v = u + 1; v < n; ++v)
      if (coin(gen) < p)
        edges.push_back({static_cast<rare::NodeId>(u), static_cast<rare::NodeId>(v)});
  rare::Matrix x(n, dim);
  for (auto& v : x.data()) v = gauss(gen);
  std::vector<int32_t> labels(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = static_cast<int32_t>(i % 5);
  return rare::Graph::from_edges(n, std::move(x), std::move(labels), std::move(edges), 5);
}

rare::Backbone backbone_of(const benchmark::State& state) {
  return state.range(1) == 0 ? rare::Backbone::gcn : rare::Backbone::sage_mean;
}

void forward_bench(benchmark::State& state) {
  auto g = random_graph(state.range(0), 64, 4.0, 23);
  auto bb = backbone_of(state);
  auto op = rare::normalized_adjacency(g, bb);
  rare::Rng rng(7);
  auto model = rare::init_model(bb, 64, 64, 5, 0.0, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rare::forward(model, op, g.features(), false, nullptr, nullptr));
  }
}

void train_step_bench(benchmark::State& state) {
  auto g = random_graph(state.range(0), 64, 4.0, 29);
  auto bb = backbone_of(state);
  auto op = rare::normalized_adjacency(g, bb);
  rare::Rng rng(7);
  auto model = rare::init_model(bb, 64, 64, 5, 0.5, rng);
  std::vector<uint8_t> mask(static_cast<size_t>(g.num_nodes()), 1);
  rare::Rng drop(13);
  for (auto _ : state) {
    rare::ForwardCache cache;
    auto logits = rare::forward(model, op, g.features(), true, &drop, &cache);
    auto lg = rare::loss_and_grad(model, cache, logits, op, g.labels(), mask, 5e-5);
    benchmark::DoNotOptimize(lg.loss);
  }
}

BENCHMARK(forward_bench)->Args({183, 0})->Args({183, 1})->Args({512, 0})->Args({512, 1});
BENCHMARK(train_step_bench)->Args({183, 0})->Args({183, 1})->Args({512, 0})->Args({512, 1});

}  // namespace

BENCHMARK_MAIN();
