#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rare/entropy.hpp"
#include "rare/graph.hpp"
#include "rare/matrix.hpp"
#include "rare/optim.hpp"
#include "rare/rng.hpp"

namespace rare {

// State: per node, how many entries of its add sequence and of its delete
// sequence are active. The rewired graph is a pure function of (original
// graph, sequences, state).
struct RewireState {
  std::vector<int32_t> add_counts;     // k_v
  std::vector<int32_t> delete_counts;  // d_v

  static RewireState zeros(int64_t n) {
    RewireState s;
    s.add_counts.assign(static_cast<size_t>(n), 0);
    s.delete_counts.assign(static_cast<size_t>(n), 0);
    return s;
  }
  int64_t size() const { return static_cast<int64_t>(add_counts.size()); }
  double mean_add() const;
  double mean_delete() const;
};

// Per-node increments in {-1, 0, +1} for both halves of the state.
struct RewireAction {
  std::vector<int8_t> add_delta;
  std::vector<int8_t> delete_delta;
};

// Clamped elementwise update: k_v stays in [0, min(k_max, |add list|)],
// d_v in [0, original degree].
RewireState transition(const RewireState& s, const RewireAction& a, const Graph& original,
                       const EntropySequence& seq, int32_t k_max);

// Rebuilds the graph from the original edge set: first remove, per node, the
// first d_v entries of its delete sequence (union over both endpoints), then
// add the first k_v entries of each add sequence (an edge nominated twice is
// added once). Never mutates its inputs.
Graph apply_rewire(const Graph& original, const RewireState& s, const EntropySequence& seq);

// R = (acc_t - acc_prev) + lambda_r * (loss_prev - loss_t)
double reward(double acc_t, double loss_t, double acc_prev, double loss_prev, double lambda_r);

// MLP policy+value net over the flattened state [k_1..k_N, d_1..d_N] / k_max.
// One tanh hidden layer feeds 2N independent 3-way action heads plus a scalar
// state value.
struct PolicyNet {
  int64_t num_nodes = 0;
  int64_t hidden = 64;
  double state_scale = 0.1;  // 1/k_max
  Matrix w1;                 // 2N x hidden
  std::vector<double> b1;    // hidden
  Matrix w2;                 // hidden x (6N+1); columns 0..6N-1 are head logits
  std::vector<double> b2;    // 6N+1

  int64_t input_dim() const { return 2 * num_nodes; }
  int64_t head_count() const { return 2 * num_nodes; }
  int64_t output_dim() const { return 6 * num_nodes + 1; }

  void save(const std::string& path) const;
  static PolicyNet load(const std::string& path);
};

PolicyNet init_policy(int64_t num_nodes, int64_t hidden, int32_t k_max, Rng& rng);

// Mode restrictions: a masked head is pinned to the no-op action and excluded
// from log-probabilities and entropy.
struct HeadMask {
  bool allow_add = true;
  bool allow_delete = true;
};

struct PolicyEval {
  std::vector<double> input;   // normalized state, 2N
  std::vector<double> hidden;  // tanh activations
  std::vector<double> logits;  // 6N head logits
  double value = 0.0;
};

PolicyEval policy_forward(const PolicyNet& net, const RewireState& s);

struct ActionSample {
  RewireAction action;
  double log_prob = 0.0;  // joint: sum over unmasked heads
  double value = 0.0;
};

ActionSample sample_action(const PolicyNet& net, const RewireState& s, Rng& rng,
                           const HeadMask& mask = {});

// Joint log-probability of a under the current net, same masking rules.
double action_log_prob(const PolicyNet& net, const RewireState& s, const RewireAction& a,
                       const HeadMask& mask = {});

// min(r * adv, clamp(r, 1-eps, 1+eps) * adv)
double clipped_surrogate(double ratio, double advantage, double clip_eps);

struct RolloutBuffer {
  std::vector<RewireState> states;
  std::vector<RewireAction> actions;
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> rewards;
  std::vector<uint8_t> dones;
  // filled by compute_gae, normalized advantages
  std::vector<double> advantages;
  std::vector<double> returns;

  int64_t size() const { return static_cast<int64_t>(rewards.size()); }
  void clear();
  void push(RewireState s, RewireAction a, double log_prob, double value, double r, bool done);
};

struct PpoConfig {
  double clip_eps = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double learning_rate = 3e-4;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  int64_t update_epochs = 4;
  int64_t rollout_len = 16;
  int64_t horizon = 32;  // episode length before reset to the zero state
};

// GAE(gamma, lambda) over the buffer; bootstrap_value is V(state after the
// last stored step), ignored past terminal steps. Advantages are then
// normalized to zero mean, unit variance.
void compute_gae(RolloutBuffer& buf, double bootstrap_value, const PpoConfig& cfg);

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

struct PolicyAdam {
  int64_t step = 0;
  AdamMoments w1, b1, w2, b2;
};

// Recomputes advantages, then runs full-batch clipped-surrogate updates for
// cfg.update_epochs epochs. Stats are from the last epoch.
PpoStats ppo_update(PolicyNet& net, PolicyAdam& opt, RolloutBuffer& buf, double bootstrap_value,
                    const PpoConfig& cfg, const HeadMask& mask = {});

struct RolloutTraceRow {
  int64_t step = 0;
  double reward = 0.0;
  double mean_k = 0.0;
  double mean_d = 0.0;
  double homophily = 0.0;
};

// CSV with header step,reward,mean_k,mean_d,homophily
void export_rollout_trace(const std::vector<RolloutTraceRow>& rows, const std::string& path);

}  // namespace rare
