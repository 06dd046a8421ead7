#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rare/matrix.hpp"

namespace rare {

using NodeId = int32_t;
using Edge = std::pair<NodeId, NodeId>;  // canonical: first < second

struct LoadStats {
  int64_t self_loops_dropped = 0;
  int64_t duplicates_collapsed = 0;
};

// Undirected attributed graph, immutable after construction.
// Edges are stored canonically (u < v, sorted ascending) plus a CSR adjacency
// holding both directions. Node ids are dense 0..N-1.
class Graph {
 public:
  Graph() = default;

  // Drops self-loops and collapses duplicate edges, counting both in stats.
  // Validates id ranges and label ranges; throws InputError on violations.
  static Graph from_edges(int64_t num_nodes, Matrix features, std::vector<int32_t> labels,
                          std::vector<Edge> edges, int64_t num_classes);

  // Same node set, features, labels and names as base, different edges.
  // Features are shared, not copied.
  static Graph with_edges(const Graph& base, std::vector<Edge> edges);

  int64_t num_nodes() const { return num_nodes_; }
  int64_t num_edges() const { return static_cast<int64_t>(edges_.size()); }
  int64_t num_classes() const { return num_classes_; }
  int64_t feature_dim() const { return features_ ? features_->cols() : 0; }

  const Matrix& features() const { return *features_; }
  const std::vector<int32_t>& labels() const { return labels_; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {col_.data() + row_ptr_[static_cast<size_t>(v)],
            col_.data() + row_ptr_[static_cast<size_t>(v) + 1]};
  }
  int64_t degree(NodeId v) const {
    return row_ptr_[static_cast<size_t>(v) + 1] - row_ptr_[static_cast<size_t>(v)];
  }
  int64_t max_degree() const { return max_degree_; }
  bool has_edge(NodeId u, NodeId v) const;

  const std::vector<int64_t>& row_ptr() const { return row_ptr_; }
  const std::vector<NodeId>& col_index() const { return col_; }

  const LoadStats& load_stats() const { return stats_; }

  // Original node name per id and label-class name per class id; empty for
  // programmatically built graphs.
  const std::vector<std::string>& node_names() const { return node_names_; }
  const std::vector<std::string>& label_names() const { return label_names_; }

  // Re-checks every structural invariant; throws InputError with the first
  // violation found. Cheap: O(N + E).
  void validate() const;

 private:
  int64_t num_nodes_ = 0;
  int64_t num_classes_ = 0;
  int64_t max_degree_ = 0;
  std::shared_ptr<const Matrix> features_;  // shared so graph copies are cheap
  std::vector<int32_t> labels_;
  std::vector<Edge> edges_;
  std::vector<int64_t> row_ptr_;
  std::vector<NodeId> col_;
  LoadStats stats_;
  std::vector<std::string> node_names_;
  std::vector<std::string> label_names_;

  friend Graph load_graph(const std::string&, const std::string&);
};

// Content file: one record per node, "name f_1 .. f_d label", whitespace
// separated, consistent arity. Edge file: "name_u name_v" per line; blank
// lines and lines starting with '#' are skipped. Node ids are assigned by
// first appearance in the content file; labels map to class ids in
// lexicographic order of the distinct label strings.
Graph load_graph(const std::string& content_path, const std::string& edges_path);

// Canonical "u v" lines, u < v, ascending; ids are the dense internal ids.
void export_edgelist(const Graph& g, const std::string& path);

// Fraction of edges whose endpoints share a label. 0 edges -> 1.0 by
// convention (also covers the single-label case trivially).
double homophily_ratio(const Graph& g);

struct SplitMask {
  std::vector<uint8_t> train, validation, test;
  uint64_t seed = 0;
  int64_t count(const std::vector<uint8_t>& m) const;
};

// Per-class shuffle keyed by seed, then largest-remainder apportionment of the
// fractions with tie priority train > validation > test. Each class lands
// within +-1 of fraction * class size in every partition. Throws InputError if
// any class has < 5 members or any partition of any class would be empty.
SplitMask stratified_split(const Graph& g, uint64_t seed,
                           std::array<double, 3> fractions = {0.6, 0.2, 0.2});

}  // namespace rare
