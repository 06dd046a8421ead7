// Command line for the rewiring pipeline. Subcommands: entropy (precompute
// the pairwise table), train (full co-training run), baseline (train on the
// untouched graph), report (summarize finished runs).
//
// Exit codes: 0 success, 1 I/O failure, 2 bad input or usage, 3 numeric
// failure (non-finite values where finite ones are required).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rare/common.hpp"
#include "rare/entropy.hpp"
#include "rare/gnn.hpp"
#include "rare/graph.hpp"
#include "rare/orchestrator.hpp"

namespace {

namespace fs = std::filesystem;

struct DatasetPaths {
  std::string content;
  std::string edges;
};

// A dataset directory holds exactly one *.content and one *.edges file.
DatasetPaths find_dataset(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw rare::InputError("dataset directory not found: " + dir);
  std::vector<std::string> content, edges;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto p = entry.path();
    if (p.extension() == ".content") content.push_back(p.string());
    if (p.extension() == ".edges") edges.push_back(p.string());
  }
  if (content.size() != 1)
    throw rare::InputError("expected exactly one *.content file in " + dir + ", found " +
                           std::to_string(content.size()));
  if (edges.size() != 1)
    throw rare::InputError("expected exactly one *.edges file in " + dir + ", found " +
                           std::to_string(edges.size()));
  return {content.front(), edges.front()};
}

struct EntropyArgs {
  std::string graph_dir;
  std::string out_path;
  double lambda = 1.0;
  std::string embed = "auto";
  int64_t target_dim = 64;
  uint64_t seed = 1;
};

int cmd_entropy(const EntropyArgs& a) {
  auto t0 = std::chrono::steady_clock::now();
  DatasetPaths ds = find_dataset(a.graph_dir);
  rare::Graph g = rare::load_graph(ds.content, ds.edges);
  g.validate();

  rare::EmbeddingConfig ecfg;
  if (a.embed == "auto") {
    ecfg = rare::EmbeddingConfig::auto_for(g.feature_dim(), a.seed);
  } else if (a.embed == "identity") {
    ecfg.mode = rare::EmbedMode::identity;
  } else {
    ecfg.mode = rare::EmbedMode::random_projection;
    ecfg.target_dim = a.target_dim;
    ecfg.seed = a.seed;
  }

  rare::Matrix z = rare::embed(g.features(), ecfg);
  rare::Matrix hf = rare::feature_entropy(z);
  rare::Matrix hs = rare::structural_entropy(g);
  rare::EntropyTable table = rare::relative_entropy(std::move(hf), std::move(hs), a.lambda);
  table.save(a.out_path);

  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("nodes   %lld\n", static_cast<long long>(g.num_nodes()));
  std::printf("lambda  %.10g\n", a.lambda);
  std::printf("seconds %.3f\n", secs);
  std::printf("table   %s\n", a.out_path.c_str());
  return 0;
}

struct TrainArgs {
  std::string graph_dir;
  std::string entropy_path;
  std::string out_dir;
  std::string backbone = "gcn";
  std::string mode = "rare";
  int64_t splits = 10;
  uint64_t seed = 1;
  int64_t iterations = 500;
  int32_t k_max = 10;
  double lambda = 1.0;
  double lambda_r = 1.0;
  int32_t fixed_add = 0;
  int32_t fixed_delete = 0;
  int32_t k_range = 5;
  int64_t hidden = 64;
  double dropout = 0.5;
  double learning_rate = 0.05;
  double weight_decay = 5e-5;
  int64_t burst_epochs = 20;
  int64_t patience = 5;
  int64_t horizon = 32;
  int64_t rollout = 16;
};

rare::RunConfig build_config(const TrainArgs& a) {
  DatasetPaths ds = find_dataset(a.graph_dir);
  rare::RunConfig cfg;
  cfg.content_path = ds.content;
  cfg.edges_path = ds.edges;
  cfg.entropy_path = a.entropy_path;
  cfg.backbone = rare::backbone_from_name(a.backbone);
  cfg.mode = rare::mode_from_name(a.mode);
  cfg.num_splits = a.splits;
  cfg.seed = a.seed;
  cfg.iterations = a.iterations;
  cfg.k_max = a.k_max;
  cfg.lambda = a.lambda;
  cfg.lambda_r = a.lambda_r;
  cfg.fixed_add = a.fixed_add;
  cfg.fixed_delete = a.fixed_delete;
  cfg.random_range = a.k_range;
  cfg.gnn.hidden = a.hidden;
  cfg.gnn.dropout = a.dropout;
  cfg.gnn.learning_rate = a.learning_rate;
  cfg.gnn.weight_decay = a.weight_decay;
  cfg.gnn.burst_epochs = a.burst_epochs;
  cfg.gnn.patience = a.patience;
  cfg.ppo.horizon = a.horizon;
  cfg.ppo.rollout_len = a.rollout;
  return cfg;
}

void print_run_summary(const rare::RunReport& r, const std::string& out_dir) {
  std::printf("mode      %s\n", r.mode.c_str());
  std::printf("backbone  %s\n", r.backbone.c_str());
  std::printf("dataset   %s (%lld nodes, %lld classes)\n", r.content_path.c_str(),
              static_cast<long long>(r.nodes), static_cast<long long>(r.classes));
  std::printf("splits    %lld  iterations %lld  seed %llu\n",
              static_cast<long long>(r.num_splits), static_cast<long long>(r.iterations),
              static_cast<unsigned long long>(r.seed));
  std::printf("test acc  %.4f +- %.4f\n", r.mean_test_accuracy, r.std_test_accuracy);
  std::printf("homophily %.4f -> %.4f\n", r.homophily_original, r.homophily_best);
  std::printf("edges     %lld -> %lld\n", static_cast<long long>(r.edges_original),
              static_cast<long long>(r.edges_best));
  std::printf("seconds   %.2f\n", r.wall_seconds);
  std::printf("report    %s\n", out_dir.c_str());
}

int cmd_train(const TrainArgs& a, bool k_given, bool d_given, bool range_given) {
  rare::RunConfig cfg = build_config(a);
  if (cfg.mode == rare::RunMode::fixed_k && (!k_given || !d_given))
    throw rare::InputError("--mode fixed-k requires explicit --k and --d");
  if (cfg.mode == rare::RunMode::random_k && !range_given)
    throw rare::InputError("--mode random-k requires explicit --k-range");
  rare::RunReport report = rare::run(cfg);
  rare::emit_report(report, a.out_dir);
  print_run_summary(report, a.out_dir);
  return 0;
}

int cmd_baseline(const TrainArgs& a) {
  rare::RunConfig cfg = build_config(a);
  rare::RunReport report = rare::baseline(cfg);
  rare::emit_report(report, a.out_dir);
  print_run_summary(report, a.out_dir);
  return 0;
}

struct ReportArgs {
  std::string in_dir;
  std::string csv_path;  // defaults to <in>/summary_long.csv
};

struct RunDirSummary {
  std::string name;
  std::string dir;
  nlohmann::json meta;
};

// A run directory is one produced by emit_report. The input is either a
// single run directory or a directory of them.
std::vector<RunDirSummary> find_runs(const std::string& in_dir) {
  std::error_code ec;
  if (!fs::is_directory(in_dir, ec))
    throw rare::InputError("run directory not found: " + in_dir);
  std::vector<RunDirSummary> runs;
  auto try_add = [&](const fs::path& dir, const std::string& name) {
    auto rj = dir / "report.json";
    if (!fs::is_regular_file(rj)) return;
    std::ifstream in(rj);
    if (!in) throw rare::IoError("cannot open " + rj.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw rare::InputError("cannot parse " + rj.string() + ": " + e.what());
    }
    runs.push_back({name, dir.string(), std::move(j)});
  };
  try_add(fs::path(in_dir), fs::path(in_dir).filename().string());
  if (runs.empty()) {
    std::vector<fs::path> subdirs;
    for (const auto& entry : fs::directory_iterator(in_dir))
      if (entry.is_directory()) subdirs.push_back(entry.path());
    std::sort(subdirs.begin(), subdirs.end());
    for (const auto& d : subdirs) try_add(d, d.filename().string());
  }
  if (runs.empty())
    throw rare::InputError("no finished runs (report.json) under " + in_dir);
  return runs;
}

// Homophily of the optimized graph, recomputed from optimized.edges against
// the original dataset when it is still reachable; falls back to the stored
// summary value otherwise.
double homophily_after(const RunDirSummary& run) {
  double stored = run.meta.at("results").at("homophily_best").get<double>();
  std::string content = run.meta.at("dataset").at("content").get<std::string>();
  std::string edges = run.meta.at("dataset").at("edges").get<std::string>();
  fs::path opt = fs::path(run.dir) / "optimized.edges";
  if (!fs::is_regular_file(content) || !fs::is_regular_file(edges) || !fs::is_regular_file(opt))
    return stored;
  rare::Graph g = rare::load_graph(content, edges);
  std::vector<rare::Edge> best;
  std::ifstream in(opt);
  int64_t u = 0, v = 0;
  while (in >> u >> v)
    best.push_back({static_cast<rare::NodeId>(u), static_cast<rare::NodeId>(v)});
  return rare::homophily_ratio(rare::Graph::with_edges(g, std::move(best)));
}

int cmd_report(const ReportArgs& a) {
  std::vector<RunDirSummary> runs = find_runs(a.in_dir);

  std::printf("%-20s %-12s %-20s %s\n", "run", "mode", "test accuracy", "homophily");
  for (const auto& run : runs) {
    const auto& res = run.meta.at("results");
    double mean = res.at("mean_test_accuracy").get<double>();
    double stdev = res.at("std_test_accuracy").get<double>();
    double before = res.at("homophily_original").get<double>();
    double after = homophily_after(run);
    char acc[40], hom[40];
    std::snprintf(acc, sizeof(acc), "%.4f +- %.4f", mean, stdev);
    std::snprintf(hom, sizeof(hom), "%.4f -> %.4f", before, after);
    std::printf("%-20s %-12s %-20s %s\n", run.name.c_str(),
                run.meta.at("mode").get<std::string>().c_str(), acc, hom);
  }

  // tall CSV: every metrics.csv row melted to one line per metric
  std::string csv_path = a.csv_path.empty() ? a.in_dir + "/summary_long.csv" : a.csv_path;
  std::ofstream out(csv_path);
  if (!out) throw rare::IoError("cannot open " + csv_path + " for writing");
  out << "run,mode,iteration,split,metric,value\n";
  const char* metric_names[] = {"train_acc", "val_acc",    "test_acc", "loss",
                                "homophily", "mean_reward", "mean_k",   "mean_d"};
  for (const auto& run : runs) {
    fs::path mp = fs::path(run.dir) / "metrics.csv";
    std::ifstream metrics(mp);
    if (!metrics) throw rare::IoError("cannot open " + mp.string());
    std::string mode = run.meta.at("mode").get<std::string>();
    std::string line;
    std::getline(metrics, line);  // header
    while (std::getline(metrics, line)) {
      if (line.empty()) continue;
      std::vector<std::string> fields;
      std::istringstream ss(line);
      std::string field;
      while (std::getline(ss, field, ',')) fields.push_back(field);
      if (fields.size() != 10)
        throw rare::InputError("malformed metrics row in " + mp.string() + ": " + line);
      for (size_t m = 0; m < 8; ++m)
        out << run.name << ',' << mode << ',' << fields[0] << ',' << fields[1] << ','
            << metric_names[m] << ',' << fields[m + 2] << '\n';
    }
  }
  if (!out) throw rare::IoError("short write: " + csv_path);
  std::printf("tall csv  %s\n", csv_path.c_str());
  return 0;
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const rare::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const rare::NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const rare::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

void add_train_flags(CLI::App* cmd, TrainArgs& a, bool with_mode, CLI::Option** k_opt,
                     CLI::Option** d_opt, CLI::Option** range_opt) {
  cmd->add_option("--graph", a.graph_dir, "Dataset directory (one *.content, one *.edges)")
      ->required();
  cmd->add_option("--out", a.out_dir, "Output directory for the report bundle")->required();
  cmd->add_option("--entropy", a.entropy_path,
                  "Precomputed entropy table; built on the fly when omitted");
  cmd->add_option("--backbone", a.backbone, "Classifier backbone")
      ->check(CLI::IsMember({"gcn", "sage"}));
  if (with_mode) {
    cmd->add_option("--mode", a.mode, "Run mode")
        ->check(CLI::IsMember({"rare", "fixed-k", "random-k", "shuffled", "add-only",
                               "remove-only", "auc-reward"}));
    *k_opt = cmd->add_option("--k", a.fixed_add, "Adds per node (required for fixed-k)");
    *d_opt = cmd->add_option("--d", a.fixed_delete, "Deletes per node (required for fixed-k)");
    *range_opt =
        cmd->add_option("--k-range", a.k_range, "Count range [0,r] (required for random-k)");
  }
  cmd->add_option("--splits", a.splits, "Stratified splits to run")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.seed, "Base seed; split i uses seed + i");
  cmd->add_option("--iterations", a.iterations, "Rewiring iterations per split")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--k-max", a.k_max, "Per-node cap on additions")->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", a.lambda, "Structural weight in the entropy table")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--lambda-r", a.lambda_r, "Loss-delta weight in the reward");
  cmd->add_option("--hidden", a.hidden, "Hidden width")->check(CLI::PositiveNumber);
  cmd->add_option("--dropout", a.dropout, "Dropout probability")
      ->check(CLI::Range(0.0, 0.999999));
  cmd->add_option("--lr", a.learning_rate, "Classifier learning rate")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--weight-decay", a.weight_decay, "L2 penalty added to gradients")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--burst-epochs", a.burst_epochs, "Epoch cap per gate firing")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--patience", a.patience, "Early-stop patience inside a burst")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--horizon", a.horizon, "Episode length before the state resets")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--rollout", a.rollout, "Transitions per policy update")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-guided graph rewiring with a co-trained node classifier"};
  app.option_defaults()->always_capture_default(true);
  app.require_subcommand(1);
  app.footer("Environment: RARE_THREADS caps worker parallelism (default: all cores).");

  EntropyArgs ea;
  CLI::App* entropy_cmd =
      app.add_subcommand("entropy", "Precompute the pairwise relative-entropy table");
  entropy_cmd->add_option("--graph", ea.graph_dir, "Dataset directory (one *.content, one *.edges)")
      ->required();
  entropy_cmd->add_option("--out", ea.out_path, "Output table file")->required();
  entropy_cmd->add_option("--lambda", ea.lambda, "Structural term weight")
      ->check(CLI::NonNegativeNumber);
  entropy_cmd->add_option("--embed", ea.embed, "Embedding for the feature term")
      ->check(CLI::IsMember({"auto", "identity", "project"}));
  entropy_cmd->add_option("--target-dim", ea.target_dim, "Projection width for --embed project")
      ->check(CLI::PositiveNumber);
  entropy_cmd->add_option("--seed", ea.seed, "Projection seed");

  TrainArgs ta;
  CLI::Option* k_opt = nullptr;
  CLI::Option* d_opt = nullptr;
  CLI::Option* range_opt = nullptr;
  CLI::App* train_cmd = app.add_subcommand("train", "Run the co-training rewiring loop");
  add_train_flags(train_cmd, ta, true, &k_opt, &d_opt, &range_opt);

  TrainArgs ba;
  CLI::App* baseline_cmd =
      app.add_subcommand("baseline", "Train on the untouched graph (fixed-k with k = d = 0)");
  add_train_flags(baseline_cmd, ba, false, nullptr, nullptr, nullptr);

  ReportArgs ra;
  CLI::App* report_cmd = app.add_subcommand("report", "Summarize finished runs");
  report_cmd->add_option("--in", ra.in_dir, "Run directory, or a directory of run directories")
      ->required();
  report_cmd->add_option("--csv", ra.csv_path, "Tall CSV path (default <in>/summary_long.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*entropy_cmd) return run_guarded([&] { return cmd_entropy(ea); });
  if (*train_cmd)
    return run_guarded([&] {
      return cmd_train(ta, k_opt->count() > 0, d_opt->count() > 0, range_opt->count() > 0);
    });
  if (*baseline_cmd) return run_guarded([&] { return cmd_baseline(ba); });
  if (*report_cmd) return run_guarded([&] { return cmd_report(ra); });
  return 2;
}
