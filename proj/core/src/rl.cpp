#include "rare/rl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "rare/common.hpp"

namespace rare {

double RewireState::mean_add() const {
  double acc = 0.0;
  for (int32_t k : add_counts) acc += k;
  return add_counts.empty() ? 0.0 : acc / static_cast<double>(add_counts.size());
}

double RewireState::mean_delete() const {
  double acc = 0.0;
  for (int32_t d : delete_counts) acc += d;
  return delete_counts.empty() ? 0.0 : acc / static_cast<double>(delete_counts.size());
}

RewireState transition(const RewireState& s, const RewireAction& a, const Graph& original,
                       const EntropySequence& seq, int32_t k_max) {
  int64_t n = original.num_nodes();
  require_input(s.size() == n, "transition: state size != node count");
  require_input(static_cast<int64_t>(a.add_delta.size()) == n &&
                    static_cast<int64_t>(a.delete_delta.size()) == n,
                "transition: action size != node count");
  require_input(k_max >= 0, "transition: negative k_max");
  RewireState out = s;
  for (int64_t v = 0; v < n; ++v) {
    auto vi = static_cast<size_t>(v);
    int32_t cap_k = std::min<int32_t>(
        k_max, static_cast<int32_t>(seq.add_candidates[vi].size()));
    int32_t cap_d = static_cast<int32_t>(seq.delete_candidates[vi].size());
    int32_t k = out.add_counts[vi] + a.add_delta[vi];
    int32_t d = out.delete_counts[vi] + a.delete_delta[vi];
    out.add_counts[vi] = std::clamp(k, 0, cap_k);
    out.delete_counts[vi] = std::clamp(d, 0, cap_d);
  }
  return out;
}

Graph apply_rewire(const Graph& original, const RewireState& s, const EntropySequence& seq) {
  int64_t n = original.num_nodes();
  require_input(s.size() == n, "apply_rewire: state size != node count");
  require_input(static_cast<int64_t>(seq.add_candidates.size()) == n &&
                    static_cast<int64_t>(seq.delete_candidates.size()) == n,
                "apply_rewire: sequence size != node count");

  std::vector<Edge> removals;
  std::vector<Edge> additions;
  for (int64_t v = 0; v < n; ++v) {
    auto vi = static_cast<size_t>(v);
    const auto& del = seq.delete_candidates[vi];
    int32_t d = std::min<int32_t>(s.delete_counts[vi], static_cast<int32_t>(del.size()));
    for (int32_t i = 0; i < d; ++i) {
      NodeId u = del[static_cast<size_t>(i)];
      removals.emplace_back(std::min<NodeId>(static_cast<NodeId>(v), u),
                            std::max<NodeId>(static_cast<NodeId>(v), u));
    }
    const auto& add = seq.add_candidates[vi];
    int32_t k = std::min<int32_t>(s.add_counts[vi], static_cast<int32_t>(add.size()));
    for (int32_t i = 0; i < k; ++i) {
      NodeId u = add[static_cast<size_t>(i)];
      additions.emplace_back(std::min<NodeId>(static_cast<NodeId>(v), u),
                             std::max<NodeId>(static_cast<NodeId>(v), u));
    }
  }
  std::sort(removals.begin(), removals.end());
  removals.erase(std::unique(removals.begin(), removals.end()), removals.end());
  std::sort(additions.begin(), additions.end());
  additions.erase(std::unique(additions.begin(), additions.end()), additions.end());

  std::vector<Edge> kept;
  kept.reserve(original.edges().size() + additions.size());
  std::set_difference(original.edges().begin(), original.edges().end(), removals.begin(),
                      removals.end(), std::back_inserter(kept));
  std::vector<Edge> merged;
  merged.reserve(kept.size() + additions.size());
  std::set_union(kept.begin(), kept.end(), additions.begin(), additions.end(),
                 std::back_inserter(merged));

  Graph rewired = Graph::with_edges(original, std::move(merged));
#ifdef RARE_INTERNAL_CHECKS
  rewired.validate();
  // removals are original edges, additions are original non-edges, so the
  // count works out exactly
  require_input(rewired.num_edges() ==
                    original.num_edges() - static_cast<int64_t>(removals.size()) +
                        static_cast<int64_t>(additions.size()),
                "apply_rewire: edge accounting failed");
#endif
  return rewired;
}

double reward(double acc_t, double loss_t, double acc_prev, double loss_prev, double lambda_r) {
  return (acc_t - acc_prev) + lambda_r * (loss_prev - loss_t);
}

PolicyNet init_policy(int64_t num_nodes, int64_t hidden, int32_t k_max, Rng& rng) {
  require_input(num_nodes >= 1 && hidden >= 1, "init_policy: bad dimensions");
  require_input(k_max >= 1, "init_policy: k_max must be >= 1");
  PolicyNet net;
  net.num_nodes = num_nodes;
  net.hidden = hidden;
  net.state_scale = 1.0 / static_cast<double>(k_max);
  auto glorot = [&rng](int64_t rows, int64_t cols) {
    Matrix w(rows, cols);
    double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (int64_t i = 0; i < rows; ++i)
      for (int64_t j = 0; j < cols; ++j) w(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
    return w;
  };
  net.w1 = glorot(net.input_dim(), hidden);
  net.b1.assign(static_cast<size_t>(hidden), 0.0);
  net.w2 = glorot(hidden, net.output_dim());
  // near-uniform initial heads; the value column keeps full scale
  for (int64_t j = 0; j < hidden; ++j)
    for (int64_t o = 0; o < 6 * num_nodes; ++o) net.w2(j, o) *= 0.01;
  net.b2.assign(static_cast<size_t>(net.output_dim()), 0.0);
  return net;
}

PolicyEval policy_forward(const PolicyNet& net, const RewireState& s) {
  int64_t n = net.num_nodes;
  require_input(s.size() == n, "policy_forward: state size != policy size");
  PolicyEval ev;
  ev.input.resize(static_cast<size_t>(net.input_dim()));
  for (int64_t i = 0; i < n; ++i) {
    ev.input[static_cast<size_t>(i)] = s.add_counts[static_cast<size_t>(i)] * net.state_scale;
    ev.input[static_cast<size_t>(n + i)] =
        s.delete_counts[static_cast<size_t>(i)] * net.state_scale;
  }
  std::vector<double> pre(net.b1);
  for (int64_t i = 0; i < net.input_dim(); ++i) {
    double xi = ev.input[static_cast<size_t>(i)];
    if (xi == 0.0) continue;
    const double* w1i = net.w1.row(i);
    for (int64_t j = 0; j < net.hidden; ++j) pre[static_cast<size_t>(j)] += xi * w1i[j];
  }
  ev.hidden.resize(static_cast<size_t>(net.hidden));
  for (int64_t j = 0; j < net.hidden; ++j)
    ev.hidden[static_cast<size_t>(j)] = std::tanh(pre[static_cast<size_t>(j)]);
  std::vector<double> out(net.b2);
  for (int64_t j = 0; j < net.hidden; ++j) {
    double hj = ev.hidden[static_cast<size_t>(j)];
    const double* w2j = net.w2.row(j);
    for (int64_t o = 0; o < net.output_dim(); ++o) out[static_cast<size_t>(o)] += hj * w2j[o];
  }
  ev.value = out.back();
  out.pop_back();
  ev.logits = std::move(out);
  return ev;
}

namespace {

// softmax over one 3-way head
void head_probs(const double* logits, double* p) {
  double peak = std::max(logits[0], std::max(logits[1], logits[2]));
  double z = 0.0;
  for (int j = 0; j < 3; ++j) {
    p[j] = std::exp(logits[j] - peak);
    z += p[j];
  }
  for (int j = 0; j < 3; ++j) p[j] /= z;
}

bool head_masked(int64_t head, int64_t n, const HeadMask& mask) {
  return head < n ? !mask.allow_add : !mask.allow_delete;
}

}  // namespace

ActionSample sample_action(const PolicyNet& net, const RewireState& s, Rng& rng,
                           const HeadMask& mask) {
  PolicyEval ev = policy_forward(net, s);
  int64_t n = net.num_nodes;
  ActionSample out;
  out.value = ev.value;
  out.action.add_delta.assign(static_cast<size_t>(n), 0);
  out.action.delete_delta.assign(static_cast<size_t>(n), 0);
  for (int64_t t = 0; t < 2 * n; ++t) {
    int8_t delta = 0;
    if (!head_masked(t, n, mask)) {
      double p[3];
      head_probs(ev.logits.data() + 3 * t, p);
      double u = rng.uniform();
      int idx = u < p[0] ? 0 : (u < p[0] + p[1] ? 1 : 2);
      delta = static_cast<int8_t>(idx - 1);
      out.log_prob += std::log(std::max(p[idx], 1e-300));
    }
    if (t < n)
      out.action.add_delta[static_cast<size_t>(t)] = delta;
    else
      out.action.delete_delta[static_cast<size_t>(t - n)] = delta;
  }
  return out;
}

double action_log_prob(const PolicyNet& net, const RewireState& s, const RewireAction& a,
                       const HeadMask& mask) {
  PolicyEval ev = policy_forward(net, s);
  int64_t n = net.num_nodes;
  double acc = 0.0;
  for (int64_t t = 0; t < 2 * n; ++t) {
    if (head_masked(t, n, mask)) continue;
    double p[3];
    head_probs(ev.logits.data() + 3 * t, p);
    int idx = (t < n ? a.add_delta[static_cast<size_t>(t)]
                     : a.delete_delta[static_cast<size_t>(t - n)]) +
              1;
    require_input(idx >= 0 && idx <= 2, "action_log_prob: delta outside {-1,0,1}");
    acc += std::log(std::max(p[idx], 1e-300));
  }
  return acc;
}

double clipped_surrogate(double ratio, double advantage, double clip_eps) {
  double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(ratio * advantage, clipped * advantage);
}

void RolloutBuffer::clear() {
  states.clear();
  actions.clear();
  log_probs.clear();
  values.clear();
  rewards.clear();
  dones.clear();
  advantages.clear();
  returns.clear();
}

void RolloutBuffer::push(RewireState s, RewireAction a, double log_prob, double value, double r,
                         bool done) {
  states.push_back(std::move(s));
  actions.push_back(std::move(a));
  log_probs.push_back(log_prob);
  values.push_back(value);
  rewards.push_back(r);
  dones.push_back(done ? 1 : 0);
}

void compute_gae(RolloutBuffer& buf, double bootstrap_value, const PpoConfig& cfg) {
  int64_t t_max = buf.size();
  require_input(t_max > 0, "gae: empty buffer");
  buf.advantages.assign(static_cast<size_t>(t_max), 0.0);
  buf.returns.assign(static_cast<size_t>(t_max), 0.0);
  double carry = 0.0;
  for (int64_t t = t_max - 1; t >= 0; --t) {
    auto ti = static_cast<size_t>(t);
    double next_value = t == t_max - 1 ? bootstrap_value : buf.values[ti + 1];
    double nonterminal = buf.dones[ti] ? 0.0 : 1.0;
    double delta = buf.rewards[ti] + cfg.gamma * next_value * nonterminal - buf.values[ti];
    carry = delta + cfg.gamma * cfg.gae_lambda * nonterminal * carry;
    buf.advantages[ti] = carry;
  }
  for (int64_t t = 0; t < t_max; ++t)
    buf.returns[static_cast<size_t>(t)] =
        buf.advantages[static_cast<size_t>(t)] + buf.values[static_cast<size_t>(t)];

  double mean = 0.0;
  for (double a : buf.advantages) mean += a;
  mean /= static_cast<double>(t_max);
  double var = 0.0;
  for (double a : buf.advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(t_max);
  double scale = 1.0 / (std::sqrt(var) + 1e-8);
  for (double& a : buf.advantages) a = (a - mean) * scale;
}

PpoStats ppo_update(PolicyNet& net, PolicyAdam& opt, RolloutBuffer& buf, double bootstrap_value,
                    const PpoConfig& cfg, const HeadMask& mask) {
  compute_gae(buf, bootstrap_value, cfg);
  int64_t t_max = buf.size();
  int64_t n = net.num_nodes;
  double inv_t = 1.0 / static_cast<double>(t_max);

  AdamParams ap;
  ap.learning_rate = cfg.learning_rate;

  PpoStats stats;
  for (int64_t epoch = 0; epoch < cfg.update_epochs; ++epoch) {
    Matrix gw1(net.w1.rows(), net.w1.cols());
    std::vector<double> gb1(net.b1.size(), 0.0);
    Matrix gw2(net.w2.rows(), net.w2.cols());
    std::vector<double> gb2(net.b2.size(), 0.0);

    stats = PpoStats{};
    std::vector<double> dout(static_cast<size_t>(net.output_dim()));
    for (int64_t s = 0; s < t_max; ++s) {
      auto si = static_cast<size_t>(s);
      PolicyEval ev = policy_forward(net, buf.states[si]);

      double new_logp = 0.0;
      double entropy_sum = 0.0;
      std::vector<double> probs(static_cast<size_t>(6 * n), 0.0);
      std::vector<double> head_entropy(static_cast<size_t>(2 * n), 0.0);
      for (int64_t t = 0; t < 2 * n; ++t) {
        if (head_masked(t, n, mask)) continue;
        double* p = probs.data() + 3 * t;
        head_probs(ev.logits.data() + 3 * t, p);
        int idx = (t < n ? buf.actions[si].add_delta[static_cast<size_t>(t)]
                         : buf.actions[si].delete_delta[static_cast<size_t>(t - n)]) +
                  1;
        new_logp += std::log(std::max(p[idx], 1e-300));
        double h = 0.0;
        for (int j = 0; j < 3; ++j)
          if (p[j] > 0.0) h -= p[j] * std::log(p[j]);
        head_entropy[static_cast<size_t>(t)] = h;
        entropy_sum += h;
      }

      double adv = buf.advantages[si];
      double ratio = std::exp(new_logp - buf.log_probs[si]);
      double unclipped = ratio * adv;
      double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv;
      double surr = std::min(unclipped, clipped);
      double g_logp = unclipped <= clipped ? -ratio * adv * inv_t : 0.0;
      if (std::abs(ratio - 1.0) > cfg.clip_eps) stats.clip_fraction += inv_t;

      double vdiff = ev.value - buf.returns[si];
      double g_value = cfg.value_coef * 2.0 * vdiff * inv_t;

      stats.policy_loss += -surr * inv_t;
      stats.value_loss += vdiff * vdiff * inv_t;
      stats.entropy += entropy_sum * inv_t;

      std::fill(dout.begin(), dout.end(), 0.0);
      for (int64_t t = 0; t < 2 * n; ++t) {
        if (head_masked(t, n, mask)) continue;
        const double* p = probs.data() + 3 * t;
        int idx = (t < n ? buf.actions[si].add_delta[static_cast<size_t>(t)]
                         : buf.actions[si].delete_delta[static_cast<size_t>(t - n)]) +
                  1;
        double ht = head_entropy[static_cast<size_t>(t)];
        for (int j = 0; j < 3; ++j) {
          double lp = std::log(std::max(p[j], 1e-300));
          dout[static_cast<size_t>(3 * t + j)] =
              g_logp * ((j == idx ? 1.0 : 0.0) - p[j]) +
              cfg.entropy_coef * inv_t * p[j] * (lp + ht);
        }
      }
      dout[static_cast<size_t>(6 * n)] = g_value;

      // backprop through the two layers
      for (size_t o = 0; o < dout.size(); ++o) gb2[o] += dout[o];
      std::vector<double> dhidden(static_cast<size_t>(net.hidden), 0.0);
      for (int64_t j = 0; j < net.hidden; ++j) {
        double hj = ev.hidden[static_cast<size_t>(j)];
        double* gw2j = gw2.row(j);
        const double* w2j = net.w2.row(j);
        double acc = 0.0;
        for (size_t o = 0; o < dout.size(); ++o) {
          gw2j[o] += hj * dout[o];
          acc += w2j[o] * dout[o];
        }
        dhidden[static_cast<size_t>(j)] = acc * (1.0 - hj * hj);
      }
      for (size_t j = 0; j < dhidden.size(); ++j) gb1[j] += dhidden[j];
      for (int64_t i = 0; i < net.input_dim(); ++i) {
        double xi = ev.input[static_cast<size_t>(i)];
        if (xi == 0.0) continue;
        double* gw1i = gw1.row(i);
        for (size_t j = 0; j < dhidden.size(); ++j) gw1i[j] += xi * dhidden[j];
      }
    }

    ++opt.step;
    adam_step_flat(net.w1.data(), gw1.data(), opt.w1, opt.step, ap);
    adam_step_flat(net.b1, gb1, opt.b1, opt.step, ap);
    adam_step_flat(net.w2.data(), gw2.data(), opt.w2, opt.step, ap);
    adam_step_flat(net.b2, gb2, opt.b2, opt.step, ap);
  }
  return stats;
}

void export_rollout_trace(const std::vector<RolloutTraceRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "step,reward,mean_k,mean_d,homophily\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(r.step), r.reward, r.mean_k, r.mean_d, r.homophily);
    out << buf;
  }
  if (!out) throw IoError("short write: " + path);
}

namespace {

constexpr char kPolicyMagic[4] = {'R', 'P', 'P', 'O'};
constexpr uint32_t kPolicyVersion = 1;

}  // namespace

void PolicyNet::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(kPolicyMagic, 4);
  uint32_t version = kPolicyVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  uint64_t dims[2] = {static_cast<uint64_t>(num_nodes), static_cast<uint64_t>(hidden)};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(&state_scale), 8);
  out.write(reinterpret_cast<const char*>(w1.data().data()), w1.size() * 8);
  out.write(reinterpret_cast<const char*>(b1.data()), static_cast<std::streamsize>(b1.size() * 8));
  out.write(reinterpret_cast<const char*>(w2.data().data()), w2.size() * 8);
  out.write(reinterpret_cast<const char*>(b2.data()), static_cast<std::streamsize>(b2.size() * 8));
  if (!out) throw IoError("short write: " + path);
}

PolicyNet PolicyNet::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open policy: " + path);
  char magic[4];
  in.read(magic, 4);
  require_input(in.gcount() == 4 && std::memcmp(magic, kPolicyMagic, 4) == 0,
                "policy: bad magic in " + path);
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  require_input(version == kPolicyVersion, "policy: unsupported version in " + path);
  uint64_t dims[2];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in) throw IoError("short read in policy: " + path);
  PolicyNet net;
  net.num_nodes = static_cast<int64_t>(dims[0]);
  net.hidden = static_cast<int64_t>(dims[1]);
  require_input(net.num_nodes >= 1 && net.hidden >= 1, "policy: bad dimensions in " + path);
  in.read(reinterpret_cast<char*>(&net.state_scale), 8);
  net.w1 = Matrix(net.input_dim(), net.hidden);
  net.b1.assign(static_cast<size_t>(net.hidden), 0.0);
  net.w2 = Matrix(net.hidden, net.output_dim());
  net.b2.assign(static_cast<size_t>(net.output_dim()), 0.0);
  in.read(reinterpret_cast<char*>(net.w1.data().data()), net.w1.size() * 8);
  in.read(reinterpret_cast<char*>(net.b1.data()), static_cast<std::streamsize>(net.b1.size() * 8));
  in.read(reinterpret_cast<char*>(net.w2.data().data()), net.w2.size() * 8);
  in.read(reinterpret_cast<char*>(net.b2.data()), static_cast<std::streamsize>(net.b2.size() * 8));
  if (!in) throw IoError("short read in policy: " + path);
  return net;
}

}  // namespace rare
