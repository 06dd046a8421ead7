#include "rare/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "rare/common.hpp"
#include "rare/rng.hpp"

namespace rare {

namespace {

struct Topology {
  std::vector<Edge> edges;
  std::vector<int64_t> row_ptr;
  std::vector<NodeId> col;
  int64_t max_degree = 0;
  LoadStats stats;
};

Topology build_topology(int64_t num_nodes, std::vector<Edge> edges);

}  // namespace

Graph Graph::from_edges(int64_t num_nodes, Matrix features, std::vector<int32_t> labels,
                        std::vector<Edge> edges, int64_t num_classes) {
  require_input(num_nodes >= 1, "graph: need at least one node");
  require_input(num_classes >= 2, "graph: need at least two classes");
  require_input(static_cast<int64_t>(labels.size()) == num_nodes,
                "graph: label count != node count");
  require_input(features.rows() == num_nodes, "graph: feature row count != node count");
  for (int64_t v = 0; v < num_nodes; ++v) {
    int32_t lab = labels[static_cast<size_t>(v)];
    require_input(lab >= 0 && lab < num_classes, "graph: label out of range at node " +
                                                     std::to_string(v));
  }

  Graph g;
  g.num_nodes_ = num_nodes;
  g.num_classes_ = num_classes;
  g.features_ = std::make_shared<Matrix>(std::move(features));
  g.labels_ = std::move(labels);

  Topology topo = build_topology(num_nodes, std::move(edges));
  g.edges_ = std::move(topo.edges);
  g.row_ptr_ = std::move(topo.row_ptr);
  g.col_ = std::move(topo.col);
  g.max_degree_ = topo.max_degree;
  g.stats_ = topo.stats;
  return g;
}

Graph Graph::with_edges(const Graph& base, std::vector<Edge> edges) {
  Graph g;
  g.num_nodes_ = base.num_nodes_;
  g.num_classes_ = base.num_classes_;
  g.features_ = base.features_;
  g.labels_ = base.labels_;
  g.node_names_ = base.node_names_;
  g.label_names_ = base.label_names_;
  Topology topo = build_topology(base.num_nodes_, std::move(edges));
  g.edges_ = std::move(topo.edges);
  g.row_ptr_ = std::move(topo.row_ptr);
  g.col_ = std::move(topo.col);
  g.max_degree_ = topo.max_degree;
  g.stats_ = topo.stats;
  return g;
}

namespace {

Topology build_topology(int64_t num_nodes, std::vector<Edge> edges) {
  Topology g;
  std::vector<Edge> canon;
  canon.reserve(edges.size());
  for (auto [u, v] : edges) {
    require_input(u >= 0 && u < num_nodes && v >= 0 && v < num_nodes,
                  "graph: edge endpoint out of range");
    if (u == v) {
      ++g.stats.self_loops_dropped;
      continue;
    }
    canon.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(canon.begin(), canon.end());
  auto last = std::unique(canon.begin(), canon.end());
  g.stats.duplicates_collapsed = canon.end() - last;
  canon.erase(last, canon.end());
  g.edges = std::move(canon);

  // CSR over both directions
  std::vector<int64_t> deg(static_cast<size_t>(num_nodes), 0);
  for (auto [u, v] : g.edges) {
    ++deg[static_cast<size_t>(u)];
    ++deg[static_cast<size_t>(v)];
  }
  g.row_ptr.assign(static_cast<size_t>(num_nodes) + 1, 0);
  for (int64_t v = 0; v < num_nodes; ++v) {
    g.row_ptr[static_cast<size_t>(v) + 1] = g.row_ptr[static_cast<size_t>(v)] + deg[static_cast<size_t>(v)];
    g.max_degree = std::max(g.max_degree, deg[static_cast<size_t>(v)]);
  }
  g.col.resize(static_cast<size_t>(g.row_ptr.back()));
  std::vector<int64_t> cursor(g.row_ptr.begin(), g.row_ptr.end() - 1);
  for (auto [u, v] : g.edges) {
    g.col[static_cast<size_t>(cursor[static_cast<size_t>(u)]++)] = v;
    g.col[static_cast<size_t>(cursor[static_cast<size_t>(v)]++)] = u;
  }
  for (int64_t v = 0; v < num_nodes; ++v) {
    auto begin = g.col.begin() + g.row_ptr[static_cast<size_t>(v)];
    auto end = g.col.begin() + g.row_ptr[static_cast<size_t>(v) + 1];
    std::sort(begin, end);
  }
  return g;
}

}  // namespace

bool Graph::has_edge(NodeId u, NodeId v) const {
  auto row = neighbors(u);
  return std::binary_search(row.begin(), row.end(), v);
}

void Graph::validate() const {
  require_input(num_nodes_ >= 1, "validate: no nodes");
  require_input(num_classes_ >= 2, "validate: fewer than two classes");
  require_input(static_cast<int64_t>(labels_.size()) == num_nodes_, "validate: label count");
  require_input(features_ && features_->rows() == num_nodes_, "validate: feature rows");
  for (int64_t v = 0; v < num_nodes_; ++v) {
    int32_t lab = labels_[static_cast<size_t>(v)];
    require_input(lab >= 0 && lab < num_classes_, "validate: label range");
  }
  Edge prev{-1, -1};
  for (auto e : edges_) {
    require_input(e.first >= 0 && e.second > e.first && e.second < num_nodes_,
                  "validate: non-canonical or out-of-range edge");
    require_input(prev < e, "validate: edges not strictly ascending");
    prev = e;
  }
  require_input(static_cast<int64_t>(row_ptr_.size()) == num_nodes_ + 1, "validate: row_ptr size");
  require_input(row_ptr_.back() == 2 * num_edges(), "validate: csr entry count");
  for (int64_t v = 0; v < num_nodes_; ++v) {
    auto row = neighbors(v);
    for (size_t i = 0; i < row.size(); ++i) {
      require_input(row[i] >= 0 && row[i] < num_nodes_, "validate: csr column range");
      require_input(row[i] != v, "validate: self-loop in csr");
      if (i > 0) require_input(row[i - 1] < row[i], "validate: csr row not strictly sorted");
    }
  }
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, const std::string& where) {
  const char* s = tok.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  require_input(end == s + tok.size(), "content file: bad number '" + tok + "' " + where);
  require_finite_msg(std::isfinite(v), "content file: non-finite feature " + where);
  return v;
}

}  // namespace

Graph load_graph(const std::string& content_path, const std::string& edges_path) {
  std::ifstream content(content_path);
  if (!content) throw IoError("cannot open content file: " + content_path);

  std::vector<std::string> names;
  std::vector<std::string> raw_labels;
  std::vector<std::vector<double>> feats;
  std::map<std::string, NodeId> id_of;
  int64_t arity = -1;

  std::string line;
  int64_t lineno = 0;
  while (std::getline(content, line)) {
    ++lineno;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    require_input(toks.size() >= 3,
                  "content file: record needs name, features, label (line " +
                      std::to_string(lineno) + ")");
    if (arity < 0) arity = static_cast<int64_t>(toks.size());
    require_input(static_cast<int64_t>(toks.size()) == arity,
                  "content file: inconsistent field count at line " + std::to_string(lineno));
    const std::string& name = toks.front();
    require_input(!id_of.count(name), "content file: duplicate node '" + name + "'");
    id_of[name] = static_cast<NodeId>(names.size());
    names.push_back(name);
    std::vector<double> row;
    row.reserve(toks.size() - 2);
    for (size_t i = 1; i + 1 < toks.size(); ++i)
      row.push_back(parse_double(toks[i], "(line " + std::to_string(lineno) + ")"));
    feats.push_back(std::move(row));
    raw_labels.push_back(toks.back());
  }
  require_input(!names.empty(), "content file: no records in " + content_path);

  std::vector<std::string> classes = raw_labels;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  require_input(classes.size() >= 2, "content file: need at least two distinct labels");
  std::map<std::string, int32_t> class_of;
  for (size_t c = 0; c < classes.size(); ++c) class_of[classes[c]] = static_cast<int32_t>(c);

  int64_t n = static_cast<int64_t>(names.size());
  int64_t d = arity - 2;
  Matrix x(n, d);
  for (int64_t v = 0; v < n; ++v)
    for (int64_t j = 0; j < d; ++j) x(v, j) = feats[static_cast<size_t>(v)][static_cast<size_t>(j)];
  std::vector<int32_t> labels(static_cast<size_t>(n));
  for (int64_t v = 0; v < n; ++v) labels[static_cast<size_t>(v)] = class_of[raw_labels[static_cast<size_t>(v)]];

  std::ifstream ef(edges_path);
  if (!ef) throw IoError("cannot open edge file: " + edges_path);
  std::vector<Edge> edges;
  lineno = 0;
  while (std::getline(ef, line)) {
    ++lineno;
    auto toks = split_ws(line);
    if (toks.empty() || toks.front()[0] == '#') continue;
    require_input(toks.size() == 2,
                  "edge file: expected two node names at line " + std::to_string(lineno));
    auto a = id_of.find(toks[0]);
    auto b = id_of.find(toks[1]);
    require_input(a != id_of.end(), "edge file: unknown node '" + toks[0] + "' at line " +
                                        std::to_string(lineno));
    require_input(b != id_of.end(), "edge file: unknown node '" + toks[1] + "' at line " +
                                        std::to_string(lineno));
    edges.emplace_back(a->second, b->second);
  }

  Graph g = Graph::from_edges(n, std::move(x), std::move(labels), std::move(edges),
                              static_cast<int64_t>(classes.size()));
  g.node_names_ = std::move(names);
  g.label_names_ = std::move(classes);
  return g;
}

void export_edgelist(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
  if (!out) throw IoError("short write: " + path);
}

double homophily_ratio(const Graph& g) {
  if (g.num_edges() == 0) return 1.0;
  int64_t same = 0;
  for (auto [u, v] : g.edges())
    if (g.labels()[static_cast<size_t>(u)] == g.labels()[static_cast<size_t>(v)]) ++same;
  return static_cast<double>(same) / static_cast<double>(g.num_edges());
}

int64_t SplitMask::count(const std::vector<uint8_t>& m) const {
  int64_t c = 0;
  for (uint8_t b : m) c += b;
  return c;
}

SplitMask stratified_split(const Graph& g, uint64_t seed, std::array<double, 3> fractions) {
  double fsum = fractions[0] + fractions[1] + fractions[2];
  require_input(std::abs(fsum - 1.0) < 1e-9, "split: fractions must sum to 1");
  for (double f : fractions) require_input(f > 0.0, "split: fractions must be positive");

  int64_t n = g.num_nodes();
  std::vector<std::vector<NodeId>> members(static_cast<size_t>(g.num_classes()));
  for (int64_t v = 0; v < n; ++v)
    members[static_cast<size_t>(g.labels()[static_cast<size_t>(v)])].push_back(
        static_cast<NodeId>(v));

  SplitMask mask;
  mask.seed = seed;
  mask.train.assign(static_cast<size_t>(n), 0);
  mask.validation.assign(static_cast<size_t>(n), 0);
  mask.test.assign(static_cast<size_t>(n), 0);

  for (size_t c = 0; c < members.size(); ++c) {
    auto& nodes = members[c];
    require_input(static_cast<int64_t>(nodes.size()) >= 5,
                  "split: class " + std::to_string(c) + " has fewer than 5 members");
    Rng rng(Rng::mix(seed, static_cast<uint64_t>(c)));
    rng.shuffle(nodes);

    // largest-remainder apportionment; remainder ties favor train, then
    // validation, then test
    int64_t m = static_cast<int64_t>(nodes.size());
    std::array<int64_t, 3> quota{};
    std::array<double, 3> rem{};
    int64_t assigned = 0;
    for (int k = 0; k < 3; ++k) {
      double exact = fractions[static_cast<size_t>(k)] * static_cast<double>(m);
      quota[static_cast<size_t>(k)] = static_cast<int64_t>(std::floor(exact));
      rem[static_cast<size_t>(k)] = exact - std::floor(exact);
      assigned += quota[static_cast<size_t>(k)];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return rem[static_cast<size_t>(a)] > rem[static_cast<size_t>(b)]; });
    for (int64_t seat = 0; seat < m - assigned; ++seat)
      ++quota[static_cast<size_t>(order[static_cast<size_t>(seat % 3)])];

    for (int k = 0; k < 3; ++k)
      require_input(quota[static_cast<size_t>(k)] > 0,
                    "split: class " + std::to_string(c) + " too small for a nonempty partition");

    int64_t i = 0;
    for (int64_t t = 0; t < quota[0]; ++t) mask.train[static_cast<size_t>(nodes[static_cast<size_t>(i++)])] = 1;
    for (int64_t t = 0; t < quota[1]; ++t) mask.validation[static_cast<size_t>(nodes[static_cast<size_t>(i++)])] = 1;
    for (int64_t t = 0; t < quota[2]; ++t) mask.test[static_cast<size_t>(nodes[static_cast<size_t>(i++)])] = 1;
  }
  return mask;
}

}  // namespace rare
