#include "rare/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include <json.hpp>

#include "rare/common.hpp"
#include "rare/threading.hpp"

namespace rare {

const char kMetricsHeader[] =
    "iteration,split,train_acc,val_acc,test_acc,loss,homophily,mean_reward,mean_k,mean_d";

std::string mode_name(RunMode m) {
  switch (m) {
    case RunMode::rare: return "rare";
    case RunMode::fixed_k: return "fixed-k";
    case RunMode::random_k: return "random-k";
    case RunMode::shuffled: return "shuffled";
    case RunMode::add_only: return "add-only";
    case RunMode::remove_only: return "remove-only";
    case RunMode::auc_reward: return "auc-reward";
  }
  return "rare";
}

RunMode mode_from_name(const std::string& name) {
  if (name == "rare") return RunMode::rare;
  if (name == "fixed-k") return RunMode::fixed_k;
  if (name == "random-k") return RunMode::random_k;
  if (name == "shuffled") return RunMode::shuffled;
  if (name == "add-only") return RunMode::add_only;
  if (name == "remove-only") return RunMode::remove_only;
  if (name == "auc-reward") return RunMode::auc_reward;
  throw InputError("unknown mode '" + name + "'");
}

void RunConfig::validate() const {
  require_input(!content_path.empty(), "config: content path is empty");
  require_input(!edges_path.empty(), "config: edge path is empty");
  require_input(iterations >= 1, "config: iterations must be >= 1");
  require_input(num_splits >= 1, "config: splits must be >= 1");
  require_input(k_max >= 1, "config: k_max must be >= 1");
  require_input(std::isfinite(lambda) && lambda >= 0.0, "config: lambda must be finite and >= 0");
  require_input(std::isfinite(lambda_r), "config: lambda_r must be finite");
  if (mode == RunMode::fixed_k)
    require_input(fixed_add >= 0 && fixed_delete >= 0, "config: fixed-k counts must be >= 0");
  if (mode == RunMode::random_k)
    require_input(random_range >= 0, "config: random-k range must be >= 0");
  require_input(gnn.hidden >= 1, "config: hidden width must be >= 1");
  require_input(gnn.dropout >= 0.0 && gnn.dropout < 1.0, "config: dropout must be in [0,1)");
  require_input(gnn.learning_rate > 0.0, "config: learning rate must be > 0");
  require_input(gnn.weight_decay >= 0.0, "config: weight decay must be >= 0");
  require_input(gnn.burst_epochs >= 1, "config: burst epochs must be >= 1");
  require_input(gnn.patience >= 0, "config: patience must be >= 0");
  require_input(ppo.clip_eps > 0.0 && ppo.clip_eps < 1.0, "config: clip must be in (0,1)");
  require_input(ppo.gamma > 0.0 && ppo.gamma <= 1.0, "config: gamma must be in (0,1]");
  require_input(ppo.gae_lambda >= 0.0 && ppo.gae_lambda <= 1.0,
                "config: gae lambda must be in [0,1]");
  require_input(ppo.learning_rate > 0.0, "config: policy learning rate must be > 0");
  require_input(ppo.update_epochs >= 1, "config: update epochs must be >= 1");
  require_input(ppo.rollout_len >= 1, "config: rollout length must be >= 1");
  require_input(ppo.horizon >= 1, "config: horizon must be >= 1");
}

namespace {

// rng stream tags per split
enum : uint64_t {
  kTagModel = 1,
  kTagDropout = 2,
  kTagPolicy = 3,
  kTagSample = 4,
  kTagMode = 5,
  kTagEmbed = 14
};

struct SplitSeries {
  std::vector<IterationRow> rows;
  SplitOutcome outcome;
};

bool is_policy_mode(RunMode m) {
  return m == RunMode::rare || m == RunMode::shuffled || m == RunMode::add_only ||
         m == RunMode::remove_only || m == RunMode::auc_reward;
}

struct PendingStep {
  RewireState state_before;
  RewireAction action;
  double log_prob = 0.0;
  double value = 0.0;
  bool done = false;
};

SplitSeries run_split(const RunConfig& cfg, const Graph& original,
                      const EntropySequence& base_seq, int64_t split_index) {
  uint64_t split_seed = cfg.seed + static_cast<uint64_t>(split_index);
  SplitMask split = stratified_split(original, split_seed);

  Rng rng_model(Rng::mix(split_seed, kTagModel));
  Rng rng_dropout(Rng::mix(split_seed, kTagDropout));
  Rng rng_policy(Rng::mix(split_seed, kTagPolicy));
  Rng rng_sample(Rng::mix(split_seed, kTagSample));
  Rng rng_mode(Rng::mix(split_seed, kTagMode));

  int64_t n = original.num_nodes();

  // per-mode candidate sequences
  const EntropySequence* seq = &base_seq;
  EntropySequence shuffled_seq;
  if (cfg.mode == RunMode::shuffled) {
    shuffled_seq = base_seq;
    shuffle_sequences(shuffled_seq, rng_mode);
    seq = &shuffled_seq;
  }

  GnnModel model = init_model(cfg.backbone, original.feature_dim(), cfg.gnn.hidden,
                              original.num_classes(), cfg.gnn.dropout, rng_model);
  AdamState adam = AdamState::make(cfg.gnn.learning_rate, cfg.gnn.weight_decay);
  TrainConfig burst{cfg.gnn.burst_epochs, cfg.gnn.patience};

  bool policy_mode = is_policy_mode(cfg.mode);
  HeadMask mask;
  if (cfg.mode == RunMode::add_only) mask.allow_delete = false;
  if (cfg.mode == RunMode::remove_only) mask.allow_add = false;

  PolicyNet policy;
  PolicyAdam policy_adam;
  RolloutBuffer buffer;
  if (policy_mode) policy = init_policy(n, 64, cfg.k_max, rng_policy);

  RewireState state = RewireState::zeros(n);
  if (cfg.mode == RunMode::fixed_k) {
    for (int64_t v = 0; v < n; ++v) {
      auto vi = static_cast<size_t>(v);
      state.add_counts[vi] = std::min<int32_t>(
          cfg.fixed_add, static_cast<int32_t>(seq->add_candidates[vi].size()));
      state.delete_counts[vi] = std::min<int32_t>(
          cfg.fixed_delete, static_cast<int32_t>(seq->delete_candidates[vi].size()));
    }
  } else if (cfg.mode == RunMode::random_k) {
    for (int64_t v = 0; v < n; ++v) {
      auto vi = static_cast<size_t>(v);
      auto k = static_cast<int32_t>(rng_mode.uniform_int(0, cfg.random_range));
      auto d = static_cast<int32_t>(rng_mode.uniform_int(0, cfg.random_range));
      state.add_counts[vi] =
          std::min<int32_t>(k, static_cast<int32_t>(seq->add_candidates[vi].size()));
      state.delete_counts[vi] =
          std::min<int32_t>(d, static_cast<int32_t>(seq->delete_candidates[vi].size()));
    }
  }
  RewireState static_state = state;  // non-policy modes hold this for t >= 1

  const Matrix& x = original.features();
  const auto& labels = original.labels();

  SplitSeries out;
  out.outcome.split = split_index;
  out.outcome.seed = split_seed;

  double reward_sum = 0.0;
  int64_t reward_count = 0;
  auto mean_reward = [&] { return reward_count == 0 ? 0.0 : reward_sum / reward_count; };

  // iteration 0: untrained model, original graph, zero state
  Graph current = original;
  RewireState row_state = RewireState::zeros(n);
  SparseOp op = normalized_adjacency(original, cfg.backbone);
  {
    Matrix logits = forward(model, op, x, false, nullptr, nullptr);
    EvalMetrics tm = metrics_from_logits(logits, labels, split.train);
    EvalMetrics vm = metrics_from_logits(logits, labels, split.validation);
    EvalMetrics sm = metrics_from_logits(logits, labels, split.test);
    IterationRow row;
    row.iteration = 0;
    row.split = split_index;
    row.train_acc = tm.accuracy;
    row.val_acc = vm.accuracy;
    row.test_acc = sm.accuracy;
    row.loss = tm.loss;
    row.homophily = homophily_ratio(original);
    row.mean_reward = 0.0;
    row.mean_k = 0.0;
    row.mean_d = 0.0;
    out.rows.push_back(row);

    out.outcome.best_iteration = 0;
    out.outcome.best_val_accuracy = vm.accuracy;
    out.outcome.test_accuracy = sm.accuracy;
    out.outcome.best_homophily = row.homophily;
    out.outcome.best_edges = original.edges();

    // the record starts at zero, so the first evaluation with any signal
    // fires the gate and gives every mode its initial training burst
    double max_acc = 0.0;
    double acc_prev = tm.accuracy;
    double loss_prev = tm.loss;
    double auc_prev = cfg.mode == RunMode::auc_reward
                          ? one_vs_rest_macro_auc(logits, labels, split.train)
                          : 0.0;

    std::optional<PendingStep> pending;
    int64_t episode_steps = 0;

    // enter the iteration loop with state matching `current`
    if (!policy_mode) {
      state = static_state;
      current = apply_rewire(original, state, *seq);
      op = normalized_adjacency(current, cfg.backbone);
      row_state = state;
    }

    for (int64_t t = 1; t <= cfg.iterations; ++t) {
      if (policy_mode) {
        // graph tracks the state left by the previous iteration's action
        current = apply_rewire(original, state, *seq);
        op = normalized_adjacency(current, cfg.backbone);
        row_state = state;
      }

      Matrix it_logits = forward(model, op, x, false, nullptr, nullptr);
      EvalMetrics it_train = metrics_from_logits(it_logits, labels, split.train);
      EvalMetrics it_val = metrics_from_logits(it_logits, labels, split.validation);
      EvalMetrics it_test = metrics_from_logits(it_logits, labels, split.test);
      double auc_t = cfg.mode == RunMode::auc_reward
                         ? one_vs_rest_macro_auc(it_logits, labels, split.train)
                         : 0.0;

      IterationRow row;
      row.iteration = t;
      row.split = split_index;
      row.train_acc = it_train.accuracy;
      row.val_acc = it_val.accuracy;
      row.test_acc = it_test.accuracy;
      row.loss = it_train.loss;
      row.homophily = homophily_ratio(current);
      row.mean_k = row_state.mean_add();
      row.mean_d = row_state.mean_delete();

      // improvement gate: train a burst whenever train accuracy sets a record
      if (it_train.accuracy > max_acc) {
        max_acc = it_train.accuracy;
        auto history =
            train_epochs(model, adam, op, x, labels, split, burst, rng_dropout);
        row.gate_fired = true;
        row.gate_epochs = static_cast<int64_t>(history.size());
      }

      // best-validation checkpoint (pre-gate metrics)
      if (it_val.accuracy > out.outcome.best_val_accuracy) {
        out.outcome.best_iteration = t;
        out.outcome.best_val_accuracy = it_val.accuracy;
        out.outcome.test_accuracy = it_test.accuracy;
        out.outcome.best_homophily = row.homophily;
        out.outcome.best_edges = current.edges();
      }

      if (policy_mode) {
        // credit the previous action with this iteration's delta
        if (pending) {
          double r = cfg.mode == RunMode::auc_reward
                         ? auc_t - auc_prev
                         : reward(it_train.accuracy, it_train.loss, acc_prev, loss_prev,
                                  cfg.lambda_r);
          reward_sum += r;
          ++reward_count;
          buffer.push(std::move(pending->state_before), std::move(pending->action),
                      pending->log_prob, pending->value, r, pending->done);
          bool was_terminal = pending->done;
          pending.reset();

          if (was_terminal) {
            // episode ends on the graph just evaluated; restart from scratch
            state = RewireState::zeros(n);
            current = original;
            op = normalized_adjacency(original, cfg.backbone);
            episode_steps = 0;
            Matrix reset_logits = forward(model, op, x, false, nullptr, nullptr);
            EvalMetrics rt = metrics_from_logits(reset_logits, labels, split.train);
            it_train = rt;
            if (cfg.mode == RunMode::auc_reward)
              auc_t = one_vs_rest_macro_auc(reset_logits, labels, split.train);
          }

          if (buffer.size() >= cfg.ppo.rollout_len) {
            double bootstrap = policy_forward(policy, state).value;
            ppo_update(policy, policy_adam, buffer, bootstrap, cfg.ppo, mask);
            buffer.clear();
          }
        }

        acc_prev = it_train.accuracy;
        loss_prev = it_train.loss;
        auc_prev = auc_t;

        ActionSample pick = sample_action(policy, state, rng_sample, mask);
        ++episode_steps;
        PendingStep step;
        step.state_before = state;
        step.action = pick.action;
        step.log_prob = pick.log_prob;
        step.value = pick.value;
        step.done = episode_steps >= cfg.ppo.horizon;
        pending = std::move(step);
        state = transition(state, pending->action, original, *seq, cfg.k_max);
      }

      row.mean_reward = mean_reward();
      out.rows.push_back(row);
    }
  }

  out.outcome.mean_reward_final = mean_reward();
  return out;
}

void append_split_stats(RunReport& report) {
  int64_t s_count = static_cast<int64_t>(report.splits.size());
  double mean = 0.0;
  for (const auto& s : report.splits) mean += s.test_accuracy;
  mean /= static_cast<double>(s_count);
  double var = 0.0;
  for (const auto& s : report.splits)
    var += (s.test_accuracy - mean) * (s.test_accuracy - mean);
  var /= static_cast<double>(s_count);
  report.mean_test_accuracy = mean;
  report.std_test_accuracy = std::sqrt(var);

  int64_t best = 0;
  for (int64_t i = 1; i < s_count; ++i)
    if (report.splits[static_cast<size_t>(i)].best_val_accuracy >
        report.splits[static_cast<size_t>(best)].best_val_accuracy)
      best = i;
  report.best_split = best;
  const auto& bs = report.splits[static_cast<size_t>(best)];
  report.homophily_best = bs.best_homophily;
  report.best_edges = bs.best_edges;
  report.edges_best = static_cast<int64_t>(bs.best_edges.size());
}

RunReport run_with_label(const RunConfig& cfg, const std::string& label) {
  cfg.validate();
  auto t0 = std::chrono::steady_clock::now();

  Graph g = load_graph(cfg.content_path, cfg.edges_path);
  g.validate();

  EntropyTable table;
  if (!cfg.entropy_path.empty()) {
    table = EntropyTable::load(cfg.entropy_path);
    require_input(table.size() == g.num_nodes(),
                  "entropy table size does not match the graph");
  } else {
    EmbeddingConfig ecfg = cfg.embed_auto
                               ? EmbeddingConfig::auto_for(g.feature_dim(),
                                                           Rng::mix(cfg.seed, kTagEmbed))
                               : cfg.embed;
    Matrix z = embed(g.features(), ecfg);
    Matrix hf = feature_entropy(z);
    Matrix hs = structural_entropy(g);
    table = relative_entropy(std::move(hf), std::move(hs), cfg.lambda);
  }
  EntropySequence seq = build_sequences(table, g);

  std::vector<SplitSeries> series(static_cast<size_t>(cfg.num_splits));
  parallel_for(cfg.num_splits, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) series[static_cast<size_t>(i)] = run_split(cfg, g, seq, i);
  });

  RunReport report;
  report.mode = label;
  report.backbone = backbone_name(cfg.backbone);
  report.content_path = cfg.content_path;
  report.edges_path = cfg.edges_path;
  report.nodes = g.num_nodes();
  report.classes = g.num_classes();
  report.feature_dim = g.feature_dim();
  report.iterations = cfg.iterations;
  report.num_splits = cfg.num_splits;
  report.seed = cfg.seed;
  report.lambda = cfg.lambda;
  report.lambda_r = cfg.lambda_r;
  report.k_max = cfg.k_max;
  report.homophily_original = homophily_ratio(g);
  report.edges_original = g.num_edges();

  for (auto& s : series) {
    report.rows.insert(report.rows.end(), s.rows.begin(), s.rows.end());
    report.splits.push_back(std::move(s.outcome));
  }
  append_split_stats(report);

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace

RunReport run(const RunConfig& cfg) { return run_with_label(cfg, mode_name(cfg.mode)); }

RunReport baseline(const RunConfig& cfg) {
  RunConfig base = cfg;
  base.mode = RunMode::fixed_k;
  base.fixed_add = 0;
  base.fixed_delete = 0;
  return run_with_label(base, "baseline");
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void emit_report(const RunReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output dir " + out_dir + ": " + ec.message());

  {
    std::ofstream csv(out_dir + "/metrics.csv");
    if (!csv) throw IoError("cannot open metrics.csv for writing in " + out_dir);
    csv << kMetricsHeader << '\n';
    for (const auto& r : report.rows) {
      csv << r.iteration << ',' << r.split << ',' << fmt_double(r.train_acc) << ','
          << fmt_double(r.val_acc) << ',' << fmt_double(r.test_acc) << ','
          << fmt_double(r.loss) << ',' << fmt_double(r.homophily) << ','
          << fmt_double(r.mean_reward) << ',' << fmt_double(r.mean_k) << ','
          << fmt_double(r.mean_d) << '\n';
    }
    if (!csv) throw IoError("short write: metrics.csv");
  }

  {
    nlohmann::ordered_json j;
    j["mode"] = report.mode;
    j["backbone"] = report.backbone;
    j["dataset"] = {{"content", report.content_path},
                    {"edges", report.edges_path},
                    {"nodes", report.nodes},
                    {"classes", report.classes},
                    {"feature_dim", report.feature_dim},
                    {"edge_count", report.edges_original}};
    j["config"] = {{"iterations", report.iterations},
                   {"splits", report.num_splits},
                   {"seed", report.seed},
                   {"k_max", report.k_max},
                   {"lambda", report.lambda},
                   {"lambda_r", report.lambda_r}};
    j["results"] = {{"mean_test_accuracy", report.mean_test_accuracy},
                    {"std_test_accuracy", report.std_test_accuracy},
                    {"homophily_original", report.homophily_original},
                    {"homophily_best", report.homophily_best},
                    {"edges_original", report.edges_original},
                    {"edges_best", report.edges_best},
                    {"best_split", report.best_split},
                    {"wall_seconds", report.wall_seconds}};
    nlohmann::ordered_json per_split = nlohmann::ordered_json::array();
    for (const auto& s : report.splits) {
      per_split.push_back({{"split", s.split},
                           {"seed", s.seed},
                           {"best_iteration", s.best_iteration},
                           {"best_val_accuracy", s.best_val_accuracy},
                           {"test_accuracy", s.test_accuracy},
                           {"homophily_best", s.best_homophily},
                           {"mean_reward_final", s.mean_reward_final}});
    }
    j["results"]["per_split"] = per_split;
    std::ofstream jf(out_dir + "/report.json");
    if (!jf) throw IoError("cannot open report.json for writing in " + out_dir);
    jf << j.dump(2) << '\n';
    if (!jf) throw IoError("short write: report.json");
  }

  {
    std::ofstream ef(out_dir + "/optimized.edges");
    if (!ef) throw IoError("cannot open optimized.edges for writing in " + out_dir);
    for (auto [u, v] : report.best_edges) ef << u << ' ' << v << '\n';
    if (!ef) throw IoError("short write: optimized.edges");
  }
}

}  // namespace rare
