// Entropy pipeline costs: pairwise feature entropy is O(N^2 d), structural
// entropy O(N^2 D) after the per-node profile build, candidate ordering
// O(N^2 log N). Node counts bracket the bundled datasets.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "rare/entropy.hpp"
#include "rare/graph.hpp"

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

void feature_entropy_bench(benchmark::State& state) {
  auto g = random_graph(state.range(0), 64, 4.0, 17);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rare::feature_entropy(g.features()));
  }
  state.SetComplexityN(state.range(0));
}

void structural_entropy_bench(benchmark::State& state) {
  auto g = random_graph(state.range(0), 64, 4.0, 18);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rare::structural_entropy(g));
  }
  state.SetComplexityN(state.range(0));
}

void sequence_bench(benchmark::State& state) {
  auto g = random_graph(state.range(0), 64, 4.0, 19);
  auto table = rare::relative_entropy(rare::feature_entropy(g.features()),
                                      rare::structural_entropy(g), 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rare::build_sequences(table, g));
  }
  state.SetComplexityN(state.range(0));
}

BENCHMARK(feature_entropy_bench)->Arg(128)->Arg(256)->Arg(512)->Complexity();
BENCHMARK(structural_entropy_bench)->Arg(128)->Arg(256)->Arg(512)->Complexity();
BENCHMARK(sequence_bench)->Arg(128)->Arg(256)->Arg(512)->Complexity();

}  // namespace

BENCHMARK_MAIN();
