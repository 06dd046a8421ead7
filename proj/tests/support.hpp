#pragma once

// Shared helpers for the test suites: throwaway directories, small graph
// builders, and dataset file writers.

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rare/graph.hpp"
#include "rare/matrix.hpp"

namespace support {

// Self-deleting temp directory under the system temp root.
class TmpDir {
 public:
  explicit TmpDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    static std::atomic<uint64_t> counter{0};
    dir_ = base / ("rare_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                   std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(dir_);
  }
  ~TmpDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  TmpDir(const TmpDir&) = delete;
  TmpDir& operator=(const TmpDir&) = delete;

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string root() const { return dir_.string(); }

 private:
  std::filesystem::path dir_;
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Graph with the given edges, one-hot-ish features (identity padded or
// truncated to dim) and round-robin labels unless explicit ones are passed.
inline rare::Graph make_graph(int64_t n, std::vector<rare::Edge> edges, int64_t num_classes = 2,
                              std::vector<int32_t> labels = {}, int64_t dim = 4) {
  rare::Matrix x(n, dim);
  for (int64_t i = 0; i < n; ++i) x(i, i % dim) = 1.0;
  if (labels.empty()) {
    labels.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = static_cast<int32_t>(i % num_classes);
  }
  return rare::Graph::from_edges(n, std::move(x), std::move(labels), std::move(edges), num_classes);
}

// Path graph 0-1-2-...-(n-1).
inline rare::Graph path_graph(int64_t n, int64_t num_classes = 2) {
  std::vector<rare::Edge> edges;
  for (int64_t i = 0; i + 1 < n; ++i)
    edges.push_back({static_cast<rare::NodeId>(i), static_cast<rare::NodeId>(i + 1)});
  return make_graph(n, std::move(edges), num_classes);
}

// Erdos-Renyi style random simple graph with features drawn N(0,1) and labels
// uniform over classes; std::mt19937 keeps it independent of the library Rng.
inline rare::Graph random_graph(int64_t n, double p, uint64_t seed, int64_t num_classes = 3,
                                int64_t dim = 8) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<rare::Edge> edges;
  for (int64_t u = 0; u < n; ++u)
    for (int64_t v = u + 1; v < n; ++v)
      if (coin(gen) < p) edges.push_back({static_cast<rare::NodeId>(u), static_cast<rare::NodeId>(v)});
  rare::Matrix x(n, dim);
  for (int64_t i = 0; i < n * dim; ++i) x.data()[i] = gauss(gen);
  std::vector<int32_t> labels(static_cast<size_t>(n));
  std::uniform_int_distribution<int32_t> lab(0, static_cast<int32_t>(num_classes - 1));
  for (auto& l : labels) l = lab(gen);
  return rare::Graph::from_edges(n, std::move(x), std::move(labels), std::move(edges), num_classes);
}

// Writes a content + edges file pair for a graph whose node names are n0..n{N-1}
// and label names c0..c{C-1}; returns the two paths.
inline std::pair<std::string, std::string> write_dataset(const TmpDir& dir, const rare::Graph& g,
                                                         const std::string& stem = "data") {
  std::ostringstream content;
  content.precision(17);
  for (int64_t v = 0; v < g.num_nodes(); ++v) {
    content << "n" << v;
    for (int64_t j = 0; j < g.feature_dim(); ++j) content << " " << g.features()(v, j);
    content << " c" << g.labels()[static_cast<size_t>(v)] << "\n";
  }
  std::ostringstream edges;
  for (const auto& [u, v] : g.edges()) edges << "n" << u << " n" << v << "\n";
  auto cp = dir.path(stem + ".content");
  auto ep = dir.path(stem + ".edges");
  write_file(cp, content.str());
  write_file(ep, edges.str());
  return {cp, ep};
}

// Edge list as a set of ordered pairs for comparisons against oracle output.
inline std::set<std::pair<int, int>> edge_set(const rare::Graph& g) {
  std::set<std::pair<int, int>> s;
  for (const auto& [u, v] : g.edges()) s.insert({u, v});
  return s;
}

// Adjacency lists (sorted ascending) for feeding the oracles.
inline std::vector<std::vector<int>> adjacency(const rare::Graph& g) {
  std::vector<std::vector<int>> adj(static_cast<size_t>(g.num_nodes()));
  for (int64_t v = 0; v < g.num_nodes(); ++v)
    for (auto u : g.neighbors(static_cast<rare::NodeId>(v))) adj[static_cast<size_t>(v)].push_back(u);
  return adj;
}

// Feature rows as vector-of-vector for the oracles.
inline std::vector<std::vector<double>> feature_rows(const rare::Matrix& m) {
  std::vector<std::vector<double>> rows(static_cast<size_t>(m.rows()));
  for (int64_t i = 0; i < m.rows(); ++i) {
    rows[static_cast<size_t>(i)].assign(m.row(i), m.row(i) + m.cols());
  }
  return rows;
}

}  // namespace support
