#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <vector>

#include "causalmp/adam.hpp"
#include "causalmp/gcn.hpp"
#include "causalmp/graph.hpp"
#include "causalmp/rng.hpp"

namespace causalmp {

// logit(u, v) = w2^T relu(W1^T (z_u * z_v) + b1) + b2
struct DecoderParams {
  DenseMatrix w1;  // d_z x d_z
  DenseMatrix b1;  // 1 x d_z
  DenseMatrix w2;  // d_z x 1
  DenseMatrix b2;  // 1 x 1

  static DecoderParams glorot(std::size_t latent_dim, Rng& rng);
  static DecoderParams zeros(std::size_t latent_dim);
};

// g = DE(EN(.)); one encoder parameter set serves both graph views.
struct LPModel {
  GcnParams encoder;
  DecoderParams decoder;

  static LPModel init(std::size_t input_dim, std::size_t hidden_dim, std::size_t latent_dim, Rng& rng);
  std::size_t latent_dim() const { return encoder.output_dim(); }
};

struct LPGradients {
  GcnGradients encoder;
  DecoderParams decoder;

  static LPGradients zeros_like(const LPModel& model);
};

DenseMatrix encode(const LPModel& model, const SparsePropagator& prop, const DenseMatrix& features,
                   GcnCache* cache = nullptr);

struct DecoderCache {
  std::vector<Edge> pairs;
  DenseMatrix product;  // z_u * z_v, one row per pair
  DenseMatrix pre;      // product W1 + b1
  DenseMatrix hidden;   // relu(pre)
};

std::vector<double> decode_pairs(const LPModel& model, const DenseMatrix& z, std::span<const Edge> pairs,
                                 DecoderCache* cache = nullptr);

// Adds decoder gradients into `grad_decoder` and returns d loss / d z.
DenseMatrix decode_backward(const LPModel& model, const DenseMatrix& z, const DecoderCache& cache,
                            std::span<const double> grad_logits, DecoderParams& grad_decoder);

struct LinkBatch {
  std::vector<Edge> pairs;
  std::vector<double> labels;

  static LinkBatch from(std::span<const Edge> positives, std::span<const Edge> negatives);
};

struct LossWeights {
  double alpha = 0.5;
  double beta = 0.05;
  // (1 - alpha) L_recon(A) + alpha L_recon(A_c) + beta L_cons instead of
  // L_recon(A) + alpha L_recon(A_c) + beta L_cons.
  bool ablation = false;
};

struct LossBreakdown {
  double total = 0.0;
  double recon_graph = 0.0;
  double recon_causal = 0.0;
  double consistency = 0.0;
};

struct LossResult {
  LossBreakdown loss;
  LPGradients grads;
};

// Joint objective over the original-graph view and the causal view. Both
// reconstruction terms score the same labelled pairs; the consistency term is
// the mean squared difference of the two encodings over all nodes.
LossResult total_loss(const LPModel& model, const SparsePropagator& graph_prop,
                      const SparsePropagator& causal_prop, const DenseMatrix& features,
                      const LinkBatch& batch, const LossWeights& weights);

// Probability that a random positive outscores a random negative, ties
// counted one half. Labels are 0/1; both classes must be present.
double auc(std::span<const double> scores, std::span<const int> labels);

struct LinkPredConfig {
  std::size_t hidden_dim = 64;
  std::size_t latent_dim = 16;
  int epochs = 2000;
  double lr = 1e-5;
  double weight_decay = 1e-4;
  int patience = 200;
  std::uint64_t seed = 0;
  LossWeights weights;
};

struct PhaseMetrics {
  int epochs_run = 0;
  double best_val_auc = 0.0;  // best seen in this phase
  std::vector<double> train_loss;
};

// Owns g across the pre-training phase and every per-iteration phase.
// `features` and `split` are referenced and must outlive the trainer.
// Validation and test pairs are scored on the causal view. The best
// validation checkpoint over all phases is kept; each phase ends by restoring it.
class LinkPredTrainer {
 public:
  LinkPredTrainer(const DenseMatrix& features, const EdgeSplit& split, LinkPredConfig config);

  PhaseMetrics train_phase(const SparsePropagator& graph_prop, const SparsePropagator& causal_prop,
                           int epochs);

  double evaluate(const SparsePropagator& prop, std::span<const Edge> positives,
                  std::span<const Edge> negatives) const;

  const LPModel& model() const noexcept { return model_; }
  double best_val_auc() const noexcept { return best_val_; }
  double test_auc_at_best() const noexcept { return best_test_; }
  int total_epochs() const noexcept { return total_epochs_; }
  const std::vector<double>& loss_curve() const noexcept { return loss_curve_; }

 private:
  std::vector<Edge> sample_train_negatives();
  void step(const LPGradients& grads);

  const DenseMatrix& features_;
  const EdgeSplit& split_;
  LinkPredConfig config_;
  std::set<Edge> train_edges_;
  LPModel model_;
  LPModel best_model_;
  Adam adam_;
  Rng neg_rng_;
  double best_val_ = -1.0;
  double best_test_ = 0.0;
  int total_epochs_ = 0;
  std::vector<double> loss_curve_;
};

struct LinkPredResult {
  LPModel model;
  double val_auc = 0.0;
  double test_auc = 0.0;
  int epochs_run = 0;
  std::vector<double> train_loss;
};

// Fresh model, one phase of config.epochs.
LinkPredResult train_linkpred(const DenseMatrix& features, const SparsePropagator& graph_prop,
                              const SparsePropagator& causal_prop, const EdgeSplit& split,
                              const LinkPredConfig& config);

void save_lp_model(const LPModel& model, const std::filesystem::path& path);
LPModel load_lp_model(const std::filesystem::path& path);

}  // namespace causalmp
