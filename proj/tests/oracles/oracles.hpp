#pragma once

// Reference implementations used only by tests. Everything here is written
// from the definitions with plain loops and containers, independently of the
// library code it checks, so the two sides can disagree.

#include <cstdint>
#include <functional>
#include <set>
#include <utility>
#include <vector>

namespace oracles {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;
using AdjList = std::vector<std::vector<int>>;
using EdgeSet = std::set<std::pair<int, int>>;

struct EntropyTriple {
  Mat feature;
  Mat structural;
  Mat combined;
};

// Pairwise softmax entropy over raw dot products (no stabilization: callers
// keep dots small), Jensen-Shannon-based structural entropy from padded
// degree-profile distributions, and their lambda-weighted sum.
EntropyTriple entropy(const Mat& embeddings, const AdjList& adj, double lambda);

// Central finite differences of f at w with step h.
Vec fd_gradient(const std::function<double(const Vec&)>& f, Vec w, double h);

// (edges \ removals) + additions by literal set algebra. removals take, per
// node v, the first delete_counts[v] entries of delete_order[v]; additions the
// first add_counts[v] of add_order[v]. Pairs are stored with the smaller id
// first.
EdgeSet rewire(const EdgeSet& edges, const AdjList& add_order, const AdjList& delete_order,
               const std::vector<int>& add_counts, const std::vector<int>& delete_counts);

struct BestStates {
  std::vector<std::vector<int>> argmax_states;  // flattened [k_0..k_n-1, d_0..d_n-1], sorted
  std::vector<int> best;                        // lexicographically smallest of the above
  double best_score = 0.0;
  int64_t states_visited = 0;
};

// Exhaustive scan of the box prod_v [0, k_cap[v]] x prod_v [0, d_cap[v]].
// Throws if the box holds more than 2e6 states.
BestStates best_state(const std::vector<int>& k_cap, const std::vector<int>& d_cap,
                      const std::function<double(const std::vector<int>&)>& evaluator);

// Dense propagation operators built entry by entry: mode 0 is the
// symmetrically normalized adjacency with self-loops, mode 1 the neighbor
// mean without self-loops.
Mat dense_operator(int n, const EdgeSet& edges, int mode);

Mat dense_matmul(const Mat& a, const Mat& b);

// Binary AUC by counting ordered pairs, ties worth one half.
double pairwise_auc(const Vec& scores, const std::vector<int>& positives);

}  // namespace oracles
