#include "rare/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "rare/common.hpp"

namespace rare {

std::string backbone_name(Backbone b) {
  return b == Backbone::gcn ? "gcn" : "sage";
}

Backbone backbone_from_name(const std::string& name) {
  if (name == "gcn") return Backbone::gcn;
  if (name == "sage") return Backbone::sage_mean;
  throw InputError("unknown backbone '" + name + "' (expected gcn or sage)");
}

Matrix SparseOp::apply(const Matrix& x) const {
  require_input(x.rows() == n, "sparse apply: row count mismatch");
  Matrix out(n, x.cols());
  int64_t w = x.cols();
  for (int64_t r = 0; r < n; ++r) {
    double* orow = out.row(r);
    for (int64_t k = row_ptr[static_cast<size_t>(r)]; k < row_ptr[static_cast<size_t>(r) + 1]; ++k) {
      const double* xrow = x.row(col[static_cast<size_t>(k)]);
      double s = val[static_cast<size_t>(k)];
      for (int64_t j = 0; j < w; ++j) orow[j] += s * xrow[j];
    }
  }
  return out;
}

Matrix SparseOp::apply_transpose(const Matrix& x) const {
  if (symmetric) return apply(x);
  require_input(x.rows() == n, "sparse apply_transpose: row count mismatch");
  Matrix out(n, x.cols());
  int64_t w = x.cols();
  for (int64_t r = 0; r < n; ++r) {
    const double* xrow = x.row(r);
    for (int64_t k = row_ptr[static_cast<size_t>(r)]; k < row_ptr[static_cast<size_t>(r) + 1]; ++k) {
      double* orow = out.row(col[static_cast<size_t>(k)]);
      double s = val[static_cast<size_t>(k)];
      for (int64_t j = 0; j < w; ++j) orow[j] += s * xrow[j];
    }
  }
  return out;
}

SparseOp normalized_adjacency(const Graph& g, Backbone backbone) {
  int64_t n = g.num_nodes();
  SparseOp op;
  op.n = n;
  if (backbone == Backbone::gcn) {
    // D^-1/2 (A+I) D^-1/2 with degrees counted after adding self-loops
    op.symmetric = true;
    std::vector<double> inv_sqrt(static_cast<size_t>(n));
    for (int64_t v = 0; v < n; ++v)
      inv_sqrt[static_cast<size_t>(v)] =
          1.0 / std::sqrt(static_cast<double>(g.degree(static_cast<NodeId>(v)) + 1));
    op.row_ptr.assign(static_cast<size_t>(n) + 1, 0);
    for (int64_t v = 0; v < n; ++v)
      op.row_ptr[static_cast<size_t>(v) + 1] =
          op.row_ptr[static_cast<size_t>(v)] + g.degree(static_cast<NodeId>(v)) + 1;
    op.col.reserve(static_cast<size_t>(op.row_ptr.back()));
    op.val.reserve(static_cast<size_t>(op.row_ptr.back()));
    for (int64_t v = 0; v < n; ++v) {
      bool placed_self = false;
      for (NodeId u : g.neighbors(static_cast<NodeId>(v))) {
        if (!placed_self && u > v) {
          op.col.push_back(static_cast<NodeId>(v));
          op.val.push_back(inv_sqrt[static_cast<size_t>(v)] * inv_sqrt[static_cast<size_t>(v)]);
          placed_self = true;
        }
        op.col.push_back(u);
        op.val.push_back(inv_sqrt[static_cast<size_t>(v)] * inv_sqrt[static_cast<size_t>(u)]);
      }
      if (!placed_self) {
        op.col.push_back(static_cast<NodeId>(v));
        op.val.push_back(inv_sqrt[static_cast<size_t>(v)] * inv_sqrt[static_cast<size_t>(v)]);
      }
    }
  } else {
    // neighbor mean, no self-loop; isolated nodes keep an all-zero row
    op.symmetric = false;
    op.row_ptr.assign(static_cast<size_t>(n) + 1, 0);
    for (int64_t v = 0; v < n; ++v)
      op.row_ptr[static_cast<size_t>(v) + 1] =
          op.row_ptr[static_cast<size_t>(v)] + g.degree(static_cast<NodeId>(v));
    op.col.reserve(static_cast<size_t>(op.row_ptr.back()));
    op.val.reserve(static_cast<size_t>(op.row_ptr.back()));
    for (int64_t v = 0; v < n; ++v) {
      int64_t deg = g.degree(static_cast<NodeId>(v));
      for (NodeId u : g.neighbors(static_cast<NodeId>(v))) {
        op.col.push_back(u);
        op.val.push_back(1.0 / static_cast<double>(deg));
      }
    }
  }
  return op;
}

GnnModel init_model(Backbone backbone, int64_t in_dim, int64_t hidden, int64_t num_classes,
                    double dropout, Rng& rng) {
  require_input(in_dim >= 1 && hidden >= 1 && num_classes >= 2, "init_model: bad dimensions");
  require_input(dropout >= 0.0 && dropout < 1.0, "init_model: dropout must be in [0,1)");
  GnnModel m;
  m.backbone = backbone;
  m.dropout = dropout;
  int64_t mult = backbone == Backbone::sage_mean ? 2 : 1;
  auto glorot = [&rng](int64_t rows, int64_t cols) {
    Matrix w(rows, cols);
    double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (int64_t i = 0; i < rows; ++i)
      for (int64_t j = 0; j < cols; ++j) w(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
    return w;
  };
  m.w1 = glorot(mult * in_dim, hidden);
  m.w2 = glorot(mult * hidden, num_classes);
  return m;
}

Matrix forward(const GnnModel& model, const SparseOp& op, const Matrix& x, bool training,
               Rng* rng, ForwardCache* cache) {
  require_input(op.n == x.rows(), "forward: operator size != node count");
  int64_t mult = model.backbone == Backbone::sage_mean ? 2 : 1;
  require_input(mult * x.cols() == model.w1.rows(), "forward: feature width != layer-1 input");
  require_input(!training || rng != nullptr, "forward: training needs an rng");

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.training = training;

  if (model.backbone == Backbone::gcn) {
    c.in1 = op.apply(x);
  } else {
    c.in1 = hcat(x, op.apply(x));
  }
  c.pre1 = matmul(c.in1, model.w1);

  int64_t hidden_w = c.pre1.cols();
  c.hidden = Matrix(c.pre1.rows(), hidden_w);
  for (int64_t i = 0; i < c.pre1.size(); ++i)
    c.hidden.data()[static_cast<size_t>(i)] =
        c.pre1.data()[static_cast<size_t>(i)] > 0.0 ? c.pre1.data()[static_cast<size_t>(i)] : 0.0;

  if (training) {
    double p = model.dropout;
    c.keep_scale = 1.0 / (1.0 - p);
    c.keep_mask.resize(static_cast<size_t>(c.hidden.size()));
    for (int64_t i = 0; i < c.hidden.size(); ++i) {
      bool keep = rng->uniform() >= p;
      c.keep_mask[static_cast<size_t>(i)] = keep;
      c.hidden.data()[static_cast<size_t>(i)] =
          keep ? c.hidden.data()[static_cast<size_t>(i)] * c.keep_scale : 0.0;
    }
  } else {
    c.keep_scale = 1.0;
    c.keep_mask.clear();
  }

  if (model.backbone == Backbone::gcn) {
    c.in2 = op.apply(c.hidden);
  } else {
    c.in2 = hcat(c.hidden, op.apply(c.hidden));
  }
  Matrix logits = matmul(c.in2, model.w2);
  require_finite_msg(logits.all_finite(), "forward: non-finite logits");
  return logits;
}

namespace {

// writes -mean log p into loss and (p - onehot)/m rows into dlogits for masked
// nodes; dlogits may be null for loss-only use
double masked_ce_impl(const Matrix& logits, const std::vector<int32_t>& labels,
                      const std::vector<uint8_t>& mask, Matrix* dlogits) {
  int64_t n = logits.rows(), k = logits.cols();
  require_input(static_cast<int64_t>(mask.size()) == n, "cross_entropy: mask size");
  require_input(static_cast<int64_t>(labels.size()) == n, "cross_entropy: label size");
  int64_t m = 0;
  for (uint8_t b : mask) m += b;
  require_input(m > 0, "cross_entropy: empty mask");

  double loss = 0.0;
  std::vector<double> p(static_cast<size_t>(k));
  for (int64_t v = 0; v < n; ++v) {
    if (!mask[static_cast<size_t>(v)]) continue;
    const double* row = logits.row(v);
    double peak = row[0];
    for (int64_t j = 1; j < k; ++j) peak = std::max(peak, row[j]);
    double z = 0.0;
    for (int64_t j = 0; j < k; ++j) {
      p[static_cast<size_t>(j)] = std::exp(row[j] - peak);
      z += p[static_cast<size_t>(j)];
    }
    int32_t lab = labels[static_cast<size_t>(v)];
    loss += -(row[lab] - peak - std::log(z));
    if (dlogits) {
      double* drow = dlogits->row(v);
      for (int64_t j = 0; j < k; ++j)
        drow[j] = (p[static_cast<size_t>(j)] / z - (j == lab ? 1.0 : 0.0)) / static_cast<double>(m);
    }
  }
  loss /= static_cast<double>(m);
  require_finite_msg(std::isfinite(loss), "cross_entropy: non-finite loss");
  return loss;
}

}  // namespace

double masked_cross_entropy(const Matrix& logits, const std::vector<int32_t>& labels,
                            const std::vector<uint8_t>& mask) {
  return masked_ce_impl(logits, labels, mask, nullptr);
}

LossGrad loss_and_grad(const GnnModel& model, const ForwardCache& cache, const Matrix& logits,
                       const SparseOp& op, const std::vector<int32_t>& labels,
                       const std::vector<uint8_t>& mask, double weight_decay) {
  LossGrad out;
  Matrix dlogits(logits.rows(), logits.cols());
  out.loss = masked_ce_impl(logits, labels, mask, &dlogits);

  out.grads.w2 = matmul_at_b(cache.in2, dlogits);
  Matrix din2 = matmul_a_bt(dlogits, model.w2);

  int64_t hidden_w = cache.hidden.cols();
  Matrix dhidden;
  if (model.backbone == Backbone::gcn) {
    dhidden = op.apply_transpose(din2);
  } else {
    // in2 = [hidden | op hidden]: gradient flows through both halves
    Matrix dagg(din2.rows(), hidden_w);
    dhidden = Matrix(din2.rows(), hidden_w);
    for (int64_t i = 0; i < din2.rows(); ++i) {
      std::memcpy(dhidden.row(i), din2.row(i), static_cast<size_t>(hidden_w) * sizeof(double));
      std::memcpy(dagg.row(i), din2.row(i) + hidden_w, static_cast<size_t>(hidden_w) * sizeof(double));
    }
    add_scaled(dhidden, op.apply_transpose(dagg), 1.0);
  }

  if (cache.training) {
    for (int64_t i = 0; i < dhidden.size(); ++i)
      dhidden.data()[static_cast<size_t>(i)] =
          cache.keep_mask[static_cast<size_t>(i)]
              ? dhidden.data()[static_cast<size_t>(i)] * cache.keep_scale
              : 0.0;
  }
  for (int64_t i = 0; i < dhidden.size(); ++i)
    if (cache.pre1.data()[static_cast<size_t>(i)] <= 0.0)
      dhidden.data()[static_cast<size_t>(i)] = 0.0;

  out.grads.w1 = matmul_at_b(cache.in1, dhidden);

  if (weight_decay != 0.0) {
    add_scaled(out.grads.w1, model.w1, weight_decay);
    add_scaled(out.grads.w2, model.w2, weight_decay);
  }
  return out;
}

void adam_step(GnnModel& model, const Gradients& grads, AdamState& state) {
  ++state.step;
  AdamParams p;
  p.learning_rate = state.learning_rate;
  p.beta1 = state.beta1;
  p.beta2 = state.beta2;
  p.epsilon = state.epsilon;
  adam_step_flat(model.w1.data(), grads.w1.data(), state.w1, state.step, p);
  adam_step_flat(model.w2.data(), grads.w2.data(), state.w2, state.step, p);
}

EvalMetrics metrics_from_logits(const Matrix& logits, const std::vector<int32_t>& labels,
                                const std::vector<uint8_t>& mask) {
  EvalMetrics out;
  out.loss = masked_cross_entropy(logits, labels, mask);
  int64_t m = 0, correct = 0;
  for (int64_t v = 0; v < logits.rows(); ++v) {
    if (!mask[static_cast<size_t>(v)]) continue;
    ++m;
    const double* row = logits.row(v);
    int64_t best = 0;  // first maximum wins: ties resolve to the lowest class id
    for (int64_t j = 1; j < logits.cols(); ++j)
      if (row[j] > row[best]) best = j;
    if (best == labels[static_cast<size_t>(v)]) ++correct;
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(m);
  return out;
}

EvalMetrics evaluate(const GnnModel& model, const SparseOp& op, const Matrix& x,
                     const std::vector<int32_t>& labels, const std::vector<uint8_t>& mask) {
  Matrix logits = forward(model, op, x, false, nullptr, nullptr);
  return metrics_from_logits(logits, labels, mask);
}

std::vector<EvalMetrics> train_epochs(GnnModel& model, AdamState& state, const SparseOp& op,
                                      const Matrix& x, const std::vector<int32_t>& labels,
                                      const SplitMask& split, const TrainConfig& cfg, Rng& rng) {
  require_input(cfg.max_epochs >= 1, "train: max_epochs must be >= 1");
  require_input(cfg.patience >= 0, "train: patience must be >= 0");
  std::vector<EvalMetrics> history;
  double best_val = std::numeric_limits<double>::infinity();
  int64_t bad = 0;
  for (int64_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    ForwardCache cache;
    Matrix logits = forward(model, op, x, true, &rng, &cache);
    LossGrad lg = loss_and_grad(model, cache, logits, op, labels, split.train, state.weight_decay);
    adam_step(model, lg.grads, state);

    Matrix eval_logits = forward(model, op, x, false, nullptr, nullptr);
    EvalMetrics tm = metrics_from_logits(eval_logits, labels, split.train);
    tm.epoch = epoch;
    history.push_back(tm);
    EvalMetrics vm = metrics_from_logits(eval_logits, labels, split.validation);
    if (vm.loss < best_val) {
      best_val = vm.loss;
      bad = 0;
    } else {
      ++bad;
    }
    if (bad >= cfg.patience) break;
  }
  return history;
}

double one_vs_rest_macro_auc(const Matrix& logits, const std::vector<int32_t>& labels,
                             const std::vector<uint8_t>& mask) {
  int64_t n = logits.rows(), k = logits.cols();
  std::vector<int64_t> rows;
  for (int64_t v = 0; v < n; ++v)
    if (mask[static_cast<size_t>(v)]) rows.push_back(v);
  require_input(!rows.empty(), "auc: empty mask");

  // softmax scores per masked row
  Matrix score(static_cast<int64_t>(rows.size()), k);
  for (size_t r = 0; r < rows.size(); ++r) {
    const double* row = logits.row(rows[r]);
    double peak = row[0];
    for (int64_t j = 1; j < k; ++j) peak = std::max(peak, row[j]);
    double z = 0.0;
    for (int64_t j = 0; j < k; ++j) z += std::exp(row[j] - peak);
    for (int64_t j = 0; j < k; ++j) score(static_cast<int64_t>(r), j) = std::exp(row[j] - peak) / z;
  }

  double total = 0.0;
  int64_t classes_used = 0;
  std::vector<std::pair<double, int>> ranked(rows.size());  // (score, is_positive)
  for (int64_t c = 0; c < k; ++c) {
    int64_t pos = 0;
    for (size_t r = 0; r < rows.size(); ++r) {
      ranked[r] = {score(static_cast<int64_t>(r), c),
                   labels[static_cast<size_t>(rows[r])] == c ? 1 : 0};
      pos += ranked[r].second;
    }
    int64_t neg = static_cast<int64_t>(rows.size()) - pos;
    if (pos == 0 || neg == 0) continue;
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    // rank sum of positives with average ranks for ties
    double pos_rank_sum = 0.0;
    size_t i = 0;
    while (i < ranked.size()) {
      size_t j = i;
      while (j + 1 < ranked.size() && ranked[j + 1].first == ranked[i].first) ++j;
      double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // ranks are 1-based
      for (size_t t = i; t <= j; ++t)
        if (ranked[t].second) pos_rank_sum += avg_rank;
      i = j + 1;
    }
    double auc = (pos_rank_sum - 0.5 * static_cast<double>(pos) * static_cast<double>(pos + 1)) /
                 (static_cast<double>(pos) * static_cast<double>(neg));
    total += auc;
    ++classes_used;
  }
  if (classes_used == 0) return 0.5;
  return total / static_cast<double>(classes_used);
}

namespace {

constexpr char kModelMagic[4] = {'R', 'M', 'D', 'L'};
constexpr uint32_t kModelVersion = 1;

}  // namespace

void GnnModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(kModelMagic, 4);
  uint32_t version = kModelVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  uint32_t tag = backbone == Backbone::gcn ? 0 : 1;
  out.write(reinterpret_cast<const char*>(&tag), 4);
  out.write(reinterpret_cast<const char*>(&dropout), 8);
  uint64_t shape[4] = {static_cast<uint64_t>(w1.rows()), static_cast<uint64_t>(w1.cols()),
                       static_cast<uint64_t>(w2.rows()), static_cast<uint64_t>(w2.cols())};
  out.write(reinterpret_cast<const char*>(shape), sizeof(shape));
  out.write(reinterpret_cast<const char*>(w1.data().data()), w1.size() * 8);
  out.write(reinterpret_cast<const char*>(w2.data().data()), w2.size() * 8);
  if (!out) throw IoError("short write: " + path);
}

GnnModel GnnModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model: " + path);
  char magic[4];
  in.read(magic, 4);
  require_input(in.gcount() == 4 && std::memcmp(magic, kModelMagic, 4) == 0,
                "model: bad magic in " + path);
  uint32_t version = 0, tag = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  require_input(version == kModelVersion, "model: unsupported version in " + path);
  in.read(reinterpret_cast<char*>(&tag), 4);
  require_input(tag <= 1, "model: bad backbone tag in " + path);
  GnnModel m;
  m.backbone = tag == 0 ? Backbone::gcn : Backbone::sage_mean;
  in.read(reinterpret_cast<char*>(&m.dropout), 8);
  uint64_t shape[4];
  in.read(reinterpret_cast<char*>(shape), sizeof(shape));
  if (!in) throw IoError("short read in model: " + path);
  m.w1 = Matrix(static_cast<int64_t>(shape[0]), static_cast<int64_t>(shape[1]));
  m.w2 = Matrix(static_cast<int64_t>(shape[2]), static_cast<int64_t>(shape[3]));
  in.read(reinterpret_cast<char*>(m.w1.data().data()), m.w1.size() * 8);
  in.read(reinterpret_cast<char*>(m.w2.data().data()), m.w2.size() * 8);
  if (!in) throw IoError("short read in model: " + path);
  return m;
}

}  // namespace rare
