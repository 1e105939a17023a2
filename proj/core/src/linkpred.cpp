#include "causalmp/linkpred.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "causalmp/error.hpp"
#include "causalmp/loss.hpp"
#include "causalmp/serialize.hpp"

namespace causalmp {

DecoderParams DecoderParams::glorot(std::size_t latent_dim, Rng& rng) {
  const LayerParams l1 = LayerParams::glorot(latent_dim, latent_dim, rng);
  const LayerParams l2 = LayerParams::glorot(latent_dim, 1, rng);
  return {l1.weight, l1.bias, l2.weight, l2.bias};
}

DecoderParams DecoderParams::zeros(std::size_t latent_dim) {
  return {DenseMatrix(latent_dim, latent_dim), DenseMatrix(1, latent_dim), DenseMatrix(latent_dim, 1),
          DenseMatrix(1, 1)};
}

LPModel LPModel::init(std::size_t input_dim, std::size_t hidden_dim, std::size_t latent_dim, Rng& rng) {
  LPModel m;
  m.encoder = GcnParams::glorot(input_dim, hidden_dim, latent_dim, rng);
  m.decoder = DecoderParams::glorot(latent_dim, rng);
  return m;
}

LPGradients LPGradients::zeros_like(const LPModel& model) {
  return {GcnGradients::zeros_like(model.encoder), DecoderParams::zeros(model.latent_dim())};
}

DenseMatrix encode(const LPModel& model, const SparsePropagator& prop, const DenseMatrix& features,
                   GcnCache* cache) {
  return gcn_forward(model.encoder, prop, features, cache);
}

std::vector<double> decode_pairs(const LPModel& model, const DenseMatrix& z, std::span<const Edge> pairs,
                                 DecoderCache* cache) {
  const std::size_t d = z.cols();
  if (d != model.decoder.w1.rows()) throw Error(ErrorCode::kShape, "decode_pairs: latent width mismatch");
  DenseMatrix product(pairs.size(), d);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const Edge& e = pairs[p];
    if (e.u >= z.rows() || e.v >= z.rows()) throw Error(ErrorCode::kInvalidArgument, "decode_pairs: node out of range");
    const auto zu = z.row(e.u);
    const auto zv = z.row(e.v);
    auto out = product.row(p);
    for (std::size_t k = 0; k < d; ++k) out[k] = zu[k] * zv[k];
  }
  DenseMatrix pre = matmul(product, model.decoder.w1);
  add_row_broadcast(pre, model.decoder.b1);
  DenseMatrix hidden = pre;
  for (double& v : hidden.values()) v = v > 0.0 ? v : 0.0;
  const DenseMatrix out = matmul(hidden, model.decoder.w2);
  std::vector<double> logits(pairs.size());
  const double b2 = model.decoder.b2(0, 0);
  for (std::size_t p = 0; p < pairs.size(); ++p) logits[p] = out(p, 0) + b2;
  if (cache != nullptr) {
    cache->pairs.assign(pairs.begin(), pairs.end());
    cache->product = std::move(product);
    cache->pre = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return logits;
}

DenseMatrix decode_backward(const LPModel& model, const DenseMatrix& z, const DecoderCache& cache,
                            std::span<const double> grad_logits, DecoderParams& grad_decoder) {
  const std::size_t n_pairs = cache.pairs.size();
  if (grad_logits.size() != n_pairs) throw Error(ErrorCode::kShape, "decode_backward: gradient length mismatch");
  const std::size_t d = z.cols();
  DenseMatrix g_out(n_pairs, 1, std::vector<double>(grad_logits.begin(), grad_logits.end()));

  grad_decoder.b2(0, 0) += std::accumulate(grad_logits.begin(), grad_logits.end(), 0.0);
  axpy(1.0, matmul_tn(cache.hidden, g_out), grad_decoder.w2);
  DenseMatrix g_pre = matmul_nt(g_out, model.decoder.w2);
  const auto pre = cache.pre.values();
  auto gp = g_pre.values();
  for (std::size_t i = 0; i < gp.size(); ++i) {
    if (!(pre[i] > 0.0)) gp[i] = 0.0;
  }
  axpy(1.0, column_sums(g_pre), grad_decoder.b1);
  axpy(1.0, matmul_tn(cache.product, g_pre), grad_decoder.w1);
  const DenseMatrix g_prod = matmul_nt(g_pre, model.decoder.w1);

  DenseMatrix g_z(z.rows(), d);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const Edge& e = cache.pairs[p];
    const auto gp_row = g_prod.row(p);
    const auto zu = z.row(e.u);
    const auto zv = z.row(e.v);
    auto gu = g_z.row(e.u);
    for (std::size_t k = 0; k < d; ++k) gu[k] += gp_row[k] * zv[k];
    auto gv = g_z.row(e.v);
    for (std::size_t k = 0; k < d; ++k) gv[k] += gp_row[k] * zu[k];
  }
  return g_z;
}

LinkBatch LinkBatch::from(std::span<const Edge> positives, std::span<const Edge> negatives) {
  LinkBatch b;
  b.pairs.reserve(positives.size() + negatives.size());
  b.pairs.insert(b.pairs.end(), positives.begin(), positives.end());
  b.pairs.insert(b.pairs.end(), negatives.begin(), negatives.end());
  b.labels.assign(positives.size(), 1.0);
  b.labels.resize(b.pairs.size(), 0.0);
  return b;
}

LossResult total_loss(const LPModel& model, const SparsePropagator& graph_prop,
                      const SparsePropagator& causal_prop, const DenseMatrix& features,
                      const LinkBatch& batch, const LossWeights& weights) {
  if (batch.pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "total_loss: empty training batch");
  if (graph_prop.n_nodes() != causal_prop.n_nodes()) {
    throw Error(ErrorCode::kShape, "total_loss: propagators cover different node sets");
  }
  const double w_graph = weights.ablation ? 1.0 - weights.alpha : 1.0;
  const double w_causal = weights.alpha;

  LossResult out{{}, LPGradients::zeros_like(model)};
  GcnCache cache_graph, cache_causal;
  const DenseMatrix z_graph = encode(model, graph_prop, features, &cache_graph);
  const DenseMatrix z_causal = encode(model, causal_prop, features, &cache_causal);

  DecoderCache dec_graph, dec_causal;
  const auto logits_graph = decode_pairs(model, z_graph, batch.pairs, &dec_graph);
  const auto logits_causal = decode_pairs(model, z_causal, batch.pairs, &dec_causal);
  BceResult bce_graph = bce_with_logits(logits_graph, batch.labels);
  BceResult bce_causal = bce_with_logits(logits_causal, batch.labels);

  DenseMatrix diff = z_causal;
  axpy(-1.0, z_graph, diff);
  const double count = static_cast<double>(diff.size());
  const double consistency = frobenius_sq(diff) / count;

  out.loss.recon_graph = bce_graph.loss;
  out.loss.recon_causal = bce_causal.loss;
  out.loss.consistency = consistency;
  out.loss.total = w_graph * bce_graph.loss + w_causal * bce_causal.loss + weights.beta * consistency;

  for (double& g : bce_graph.grad) g *= w_graph;
  for (double& g : bce_causal.grad) g *= w_causal;
  DenseMatrix gz_graph = decode_backward(model, z_graph, dec_graph, bce_graph.grad, out.grads.decoder);
  DenseMatrix gz_causal = decode_backward(model, z_causal, dec_causal, bce_causal.grad, out.grads.decoder);
  // d/dz_causal of beta * mean(diff^2) = 2 beta diff / count, opposite sign for z_graph.
  axpy(2.0 * weights.beta / count, diff, gz_causal);
  axpy(-2.0 * weights.beta / count, diff, gz_graph);

  out.grads.encoder.accumulate(gcn_backward(model.encoder, cache_graph, gz_graph));
  out.grads.encoder.accumulate(gcn_backward(model.encoder, cache_causal, gz_causal));
  return out;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::kShape, "auc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::int64_t n_pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(ErrorCode::kInvalidArgument, "auc: labels must be 0 or 1");
    n_pos += y;
  }
  const auto n = static_cast<std::int64_t>(scores.size());
  const std::int64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::kInvalidArgument, "auc: both classes must be present");

  // Twice the average 1-based rank of a tie group spanning [first, last] is first + last + 2.
  std::int64_t rank2_sum = 0;
  std::size_t first = 0;
  while (first < order.size()) {
    std::size_t last = first;
    while (last + 1 < order.size() && scores[order[last + 1]] == scores[order[first]]) ++last;
    const auto rank2 = static_cast<std::int64_t>(first + last + 2);
    for (std::size_t k = first; k <= last; ++k) {
      if (labels[order[k]] == 1) rank2_sum += rank2;
    }
    first = last + 1;
  }
  const std::int64_t u2 = rank2_sum - n_pos * (n_pos + 1);
  return static_cast<double>(u2) / static_cast<double>(2 * n_pos * n_neg);
}

LinkPredTrainer::LinkPredTrainer(const DenseMatrix& features, const EdgeSplit& split, LinkPredConfig config)
    : features_(features),
      split_(split),
      config_(config),
      train_edges_(split.train_pos.begin(), split.train_pos.end()),
      adam_({.lr = config.lr, .weight_decay = config.weight_decay}),
      neg_rng_(make_stream(config.seed, stream::kLinkPred + 100)) {
  if (split.train_pos.empty()) throw Error(ErrorCode::kInvalidArgument, "LinkPredTrainer: empty training split");
  Rng init_rng = make_stream(config.seed, stream::kLinkPred);
  model_ = LPModel::init(features.cols(), config.hidden_dim, config.latent_dim, init_rng);
  best_model_ = model_;
}

std::vector<Edge> LinkPredTrainer::sample_train_negatives() {
  const auto n = static_cast<NodeId>(features_.rows());
  std::uniform_int_distribution<NodeId> pick(0, n - 1);
  std::vector<Edge> neg;
  neg.reserve(split_.train_pos.size());
  std::size_t attempts = 0;
  while (neg.size() < split_.train_pos.size()) {
    if (++attempts > 1000 * split_.train_pos.size() + 1000) {
      throw Error(ErrorCode::kInfeasible, "negative resampling: no non-edges available");
    }
    const NodeId a = pick(neg_rng_);
    const NodeId b = pick(neg_rng_);
    if (a == b) continue;
    const Edge e = Edge{a, b}.canonical();
    if (!train_edges_.contains(e)) neg.push_back(e);
  }
  return neg;
}

void LinkPredTrainer::step(const LPGradients& g) {
  const std::array<DenseMatrix*, 8> params = {
      &model_.encoder.first.weight,  &model_.encoder.first.bias, &model_.encoder.second.weight,
      &model_.encoder.second.bias,   &model_.decoder.w1,         &model_.decoder.b1,
      &model_.decoder.w2,            &model_.decoder.b2};
  const std::array<const DenseMatrix*, 8> grads = {
      &g.encoder.first.weight, &g.encoder.first.bias, &g.encoder.second.weight, &g.encoder.second.bias,
      &g.decoder.w1,           &g.decoder.b1,         &g.decoder.w2,            &g.decoder.b2};
  adam_.step(params, grads);
  ++model_.encoder.version;
}

double LinkPredTrainer::evaluate(const SparsePropagator& prop, std::span<const Edge> positives,
                                 std::span<const Edge> negatives) const {
  const DenseMatrix z = encode(model_, prop, features_);
  const LinkBatch batch = LinkBatch::from(positives, negatives);
  const auto logits = decode_pairs(model_, z, batch.pairs);
  std::vector<int> labels(batch.labels.begin(), batch.labels.end());
  return auc(logits, labels);
}

PhaseMetrics LinkPredTrainer::train_phase(const SparsePropagator& graph_prop,
                                          const SparsePropagator& causal_prop, int epochs) {
  PhaseMetrics metrics;
  metrics.best_val_auc = -1.0;
  int since_improvement = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const auto negatives = sample_train_negatives();
    const LinkBatch batch = LinkBatch::from(split_.train_pos, negatives);
    const LossResult result = total_loss(model_, graph_prop, causal_prop, features_, batch, config_.weights);
    if (!std::isfinite(result.loss.total)) {
      throw Error(ErrorCode::kNumeric, "link prediction loss diverged at epoch " + std::to_string(total_epochs_));
    }
    step(result.grads);
    metrics.train_loss.push_back(result.loss.total);
    loss_curve_.push_back(result.loss.total);
    ++metrics.epochs_run;
    ++total_epochs_;

    const double val = evaluate(causal_prop, split_.val_pos, split_.val_neg);
    metrics.best_val_auc = std::max(metrics.best_val_auc, val);
    if (val > best_val_) {
      best_val_ = val;
      best_test_ = evaluate(causal_prop, split_.test_pos, split_.test_neg);
      best_model_ = model_;
      since_improvement = 0;
    } else if (++since_improvement >= config_.patience) {
      break;
    }
  }
  if (best_val_ >= 0.0) {
    const std::uint64_t version = model_.encoder.version;
    model_ = best_model_;
    model_.encoder.version = version + 1;
  }
  return metrics;
}

LinkPredResult train_linkpred(const DenseMatrix& features, const SparsePropagator& graph_prop,
                              const SparsePropagator& causal_prop, const EdgeSplit& split,
                              const LinkPredConfig& config) {
  LinkPredTrainer trainer(features, split, config);
  const PhaseMetrics m = trainer.train_phase(graph_prop, causal_prop, config.epochs);
  return {trainer.model(), trainer.best_val_auc(), trainer.test_auc_at_best(), m.epochs_run, m.train_loss};
}

void save_lp_model(const LPModel& model, const std::filesystem::path& path) {
  const std::array<const DenseMatrix*, 8> tensors = {
      &model.encoder.first.weight, &model.encoder.first.bias, &model.encoder.second.weight,
      &model.encoder.second.bias,  &model.decoder.w1,         &model.decoder.b1,
      &model.decoder.w2,           &model.decoder.b2};
  save_tensors(path, tensors);
}

LPModel load_lp_model(const std::filesystem::path& path) {
  auto t = load_tensors(path);
  if (t.size() != 8) throw Error(ErrorCode::kFormat, "link prediction model expects 8 tensors");
  LPModel m;
  m.encoder.first = {std::move(t[0]), std::move(t[1])};
  m.encoder.second = {std::move(t[2]), std::move(t[3])};
  m.decoder = {std::move(t[4]), std::move(t[5]), std::move(t[6]), std::move(t[7])};
  return m;
}

}  // namespace causalmp
