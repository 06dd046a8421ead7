#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rare/graph.hpp"
#include "rare/matrix.hpp"

namespace rare {

class Rng;

// Node embedding used by the pairwise feature term. Identity keeps raw
// features; random projection draws a fixed d x h Gaussian matrix with entry
// std 1/sqrt(d) from the given seed.
enum class EmbedMode { identity, random_projection };

struct EmbeddingConfig {
  EmbedMode mode = EmbedMode::identity;
  int64_t target_dim = 0;  // projection width h; ignored for identity
  uint64_t seed = 0;

  // identity when d <= 64, else projection to 64
  static EmbeddingConfig auto_for(int64_t feature_dim, uint64_t seed);
};

Matrix embed(const Matrix& features, const EmbeddingConfig& config);

// H_f(v,u) = -P(v,u) ln P(v,u) with P the softmax of <z_v, z_u> over all
// ordered pairs, including i = j. Log-sum-exp stabilized; summations run in a
// fixed row-major order so results are reproducible bit for bit. If
// probability_sum is non-null it receives an independently recomputed sum of
// all pair probabilities (== 1 up to roundoff).
Matrix feature_entropy(const Matrix& embeddings, double* probability_sum = nullptr);

// Degrees of v and its one-hop neighbors, sorted descending, zero-padded to
// M+1 entries (M = max degree in the graph), then normalized to sum 1. An
// isolated node yields the point mass [1, 0, ..., 0].
struct DegreeProfile {
  std::vector<int64_t> sequence;      // padded, sorted descending
  std::vector<double> distribution;   // sequence / sum
};

DegreeProfile degree_profile(const Graph& g, NodeId v);

// H_s(v,u) = 1 - JS(p_v || p_u) with JS in log base 2, so entries lie in
// [0,1]; the diagonal is exactly 1. Row blocks may run in parallel.
Matrix structural_entropy(const Graph& g);

// H = H_f + lambda * H_s
struct EntropyTable {
  Matrix feature;
  Matrix structural;
  Matrix combined;
  double lambda = 1.0;

  int64_t size() const { return combined.rows(); }

  void save(const std::string& path) const;
  static EntropyTable load(const std::string& path);
};

// Refuses graphs above 20000 nodes: the dense table would need tens of GB.
EntropyTable relative_entropy(Matrix feature, Matrix structural, double lambda);

// Per node: add candidates are the non-neighbors (v excluded) ordered by
// combined entropy descending, ties broken by ascending id; delete candidates
// are the one-hop neighbors ordered ascending, same tie break.
struct EntropySequence {
  std::vector<std::vector<NodeId>> add_candidates;
  std::vector<std::vector<NodeId>> delete_candidates;
};

EntropySequence build_sequences(const EntropyTable& table, const Graph& g);

// Uniformly reshuffles every candidate list in place. Control arm for
// sequence-order ablations.
void shuffle_sequences(EntropySequence& seq, Rng& rng);

}  // namespace rare
