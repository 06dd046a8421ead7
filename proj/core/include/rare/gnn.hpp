#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rare/graph.hpp"
#include "rare/matrix.hpp"
#include "rare/optim.hpp"
#include "rare/rng.hpp"

namespace rare {

enum class Backbone { gcn, sage_mean };

std::string backbone_name(Backbone b);
Backbone backbone_from_name(const std::string& name);

// Sparse propagation operator in CSR form. For gcn it is the symmetrically
// normalized adjacency with self-loops, D^-1/2 (A+I) D^-1/2. For sage_mean it
// is the row-normalized neighbor mean without self-loops (all-zero rows for
// isolated nodes).
struct SparseOp {
  int64_t n = 0;
  std::vector<int64_t> row_ptr;
  std::vector<NodeId> col;
  std::vector<double> val;
  bool symmetric = false;

  Matrix apply(const Matrix& x) const;
  Matrix apply_transpose(const Matrix& x) const;
};

SparseOp normalized_adjacency(const Graph& g, Backbone backbone);

// Two-layer model. For gcn the layer maps are w1: d x h, w2: h x C. For
// sage_mean each layer concatenates self and aggregated neighbor features, so
// w1: 2d x h and w2: 2h x C.
struct GnnModel {
  Backbone backbone = Backbone::gcn;
  double dropout = 0.5;
  Matrix w1, w2;

  void save(const std::string& path) const;
  static GnnModel load(const std::string& path);
};

// Glorot-uniform weights from the given rng stream.
GnnModel init_model(Backbone backbone, int64_t in_dim, int64_t hidden, int64_t num_classes,
                    double dropout, Rng& rng);

// Intermediates needed by the backward pass.
struct ForwardCache {
  Matrix in1;                       // layer-1 input after aggregation/concat
  Matrix pre1;                      // pre-activation of layer 1
  Matrix hidden;                    // post relu+dropout, pre layer-2 aggregation
  Matrix in2;                       // layer-2 input after aggregation/concat
  std::vector<uint8_t> keep_mask;   // dropout keep flags, training only
  double keep_scale = 1.0;          // 1/(1-p)
  bool training = false;
};

// training=true applies inverted dropout after the relu, drawing the mask from
// rng. cache may be null when only logits are needed. Throws NumericError if
// logits go non-finite.
Matrix forward(const GnnModel& model, const SparseOp& op, const Matrix& x, bool training,
               Rng* rng, ForwardCache* cache);

struct Gradients {
  Matrix w1, w2;
};

// Masked softmax cross-entropy averaged over mask nodes, plus L2 weight decay
// applied to the gradients (the reported loss is the data term only).
struct LossGrad {
  double loss = 0.0;
  Gradients grads;
};

LossGrad loss_and_grad(const GnnModel& model, const ForwardCache& cache, const Matrix& logits,
                       const SparseOp& op, const std::vector<int32_t>& labels,
                       const std::vector<uint8_t>& mask, double weight_decay);

double masked_cross_entropy(const Matrix& logits, const std::vector<int32_t>& labels,
                            const std::vector<uint8_t>& mask);

struct AdamState {
  double learning_rate = 0.05;
  double weight_decay = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int64_t step = 0;
  AdamMoments w1, w2;

  static AdamState make(double lr, double wd) {
    AdamState s;
    s.learning_rate = lr;
    s.weight_decay = wd;
    return s;
  }
};

void adam_step(GnnModel& model, const Gradients& grads, AdamState& state);

struct EvalMetrics {
  double accuracy = 0.0;
  double loss = 0.0;
  int64_t epoch = 0;
};

// Accuracy (argmax ties resolve to the lowest class id) and cross entropy over
// the mask, from a single non-training forward.
EvalMetrics evaluate(const GnnModel& model, const SparseOp& op, const Matrix& x,
                     const std::vector<int32_t>& labels, const std::vector<uint8_t>& mask);

EvalMetrics metrics_from_logits(const Matrix& logits, const std::vector<int32_t>& labels,
                                const std::vector<uint8_t>& mask);

struct TrainConfig {
  int64_t max_epochs = 20;
  int64_t patience = 5;  // stop once this many consecutive epochs fail to improve val loss
};

// Full-batch epochs with early stopping on validation loss. History holds one
// entry per epoch actually run (train-mask metrics). patience=0 runs exactly
// one epoch.
std::vector<EvalMetrics> train_epochs(GnnModel& model, AdamState& state, const SparseOp& op,
                                      const Matrix& x, const std::vector<int32_t>& labels,
                                      const SplitMask& split, const TrainConfig& cfg, Rng& rng);

// One-vs-rest AUC per class from softmax scores, macro-averaged over classes
// present in the mask; tied scores count 1/2. Single-class masks return 0.5.
double one_vs_rest_macro_auc(const Matrix& logits, const std::vector<int32_t>& labels,
                             const std::vector<uint8_t>& mask);

}  // namespace rare
