#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rare/entropy.hpp"
#include "rare/gnn.hpp"
#include "rare/graph.hpp"
#include "rare/rl.hpp"

namespace rare {

// rare        policy-driven rewiring, accuracy+loss reward
// fixed_k     static state: k adds and d deletes per node, no policy
// random_k    static state drawn uniformly per node per split, no policy
// shuffled    rare with candidate sequences shuffled (order ablation)
// add_only    rare with delete heads pinned to no-op
// remove_only rare with add heads pinned to no-op
// auc_reward  rare with reward = delta of train-mask macro AUC
enum class RunMode { rare, fixed_k, random_k, shuffled, add_only, remove_only, auc_reward };

std::string mode_name(RunMode m);
RunMode mode_from_name(const std::string& name);

struct GnnConfig {
  int64_t hidden = 64;
  double dropout = 0.5;
  double learning_rate = 0.05;
  double weight_decay = 5e-5;
  int64_t burst_epochs = 20;  // epoch cap for one gate firing
  int64_t patience = 5;
};

struct RunConfig {
  std::string content_path;
  std::string edges_path;
  Backbone backbone = Backbone::gcn;
  RunMode mode = RunMode::rare;

  double lambda = 1.0;    // structural term weight in relative entropy
  double lambda_r = 1.0;  // loss-delta weight in the reward
  int64_t iterations = 500;
  int64_t num_splits = 10;
  uint64_t seed = 1;  // split i uses seed + i
  int32_t k_max = 10;

  int32_t fixed_add = 0;     // fixed_k mode
  int32_t fixed_delete = 0;  // fixed_k mode
  int32_t random_range = 5;  // random_k mode: draws from [0, range]

  GnnConfig gnn;
  PpoConfig ppo;

  // optional precomputed entropy table; when empty the table is built from
  // the graph with the embedding below
  std::string entropy_path;
  bool embed_auto = true;  // identity if d <= 64 else projection to 64
  EmbeddingConfig embed;   // honored when embed_auto is false

  void validate() const;  // throws InputError on the first bad field
};

struct IterationRow {
  int64_t iteration = 0;
  int64_t split = 0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  double loss = 0.0;
  double homophily = 0.0;
  double mean_reward = 0.0;  // running mean of credited rewards this split
  double mean_k = 0.0;
  double mean_d = 0.0;
  bool gate_fired = false;   // not written to the CSV
  int64_t gate_epochs = 0;   // epochs the gate burst ran
};

struct SplitOutcome {
  int64_t split = 0;
  uint64_t seed = 0;
  int64_t best_iteration = 0;      // earliest iteration with the best val accuracy
  double best_val_accuracy = 0.0;
  double test_accuracy = 0.0;      // test accuracy at that iteration
  double best_homophily = 0.0;     // homophily of the graph at that iteration
  double mean_reward_final = 0.0;
  std::vector<Edge> best_edges;
};

struct RunReport {
  std::string mode;
  std::string backbone;
  std::string content_path;
  std::string edges_path;
  int64_t nodes = 0;
  int64_t classes = 0;
  int64_t feature_dim = 0;
  int64_t iterations = 0;
  int64_t num_splits = 0;
  uint64_t seed = 0;
  double lambda = 0.0;
  double lambda_r = 0.0;
  int32_t k_max = 0;

  std::vector<IterationRow> rows;  // split-major, iterations 0..T per split
  std::vector<SplitOutcome> splits;

  double mean_test_accuracy = 0.0;
  double std_test_accuracy = 0.0;
  double homophily_original = 0.0;
  double homophily_best = 0.0;  // best split's selected graph
  int64_t best_split = 0;       // max best_val_accuracy, ties to the lowest index
  int64_t edges_original = 0;
  int64_t edges_best = 0;
  std::vector<Edge> best_edges;
  double wall_seconds = 0.0;
};

// Full co-training run: per split, the model is evaluated on the current
// rewired graph each iteration, trained for a burst whenever training
// accuracy beats the running maximum (which starts at zero, so the first
// evaluation trains once), and (in policy modes) the rewiring
// agent collects one transition per iteration with rewards credited one
// iteration later. Iteration 0 is the untrained model on the original graph.
// Splits run as independent jobs, at most RARE_THREADS at a time, and are
// collected in index order, so reports are identical at any thread count.
RunReport run(const RunConfig& cfg);

// Identical to run() with mode fixed_k and k = d = 0 (the model trains on the
// untouched graph); only the report's mode label differs.
RunReport baseline(const RunConfig& cfg);

// Writes exactly three files into out_dir (created if missing):
// metrics.csv, report.json, optimized.edges.
void emit_report(const RunReport& report, const std::string& out_dir);

// The pinned metrics.csv header.
extern const char kMetricsHeader[];

}  // namespace rare
