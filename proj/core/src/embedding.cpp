#include "causalmp/embedding.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <string>

#include "causalmp/adam.hpp"
#include "causalmp/error.hpp"
#include "causalmp/serialize.hpp"

namespace causalmp {

namespace {

constexpr double kStdFloor = 1e-8;

struct Standardized {
  DenseMatrix values;           // Zs
  std::vector<double> std_dev;  // per column, floored
  std::vector<bool> floored;
};

Standardized standardize(const DenseMatrix& z) {
  const std::size_t n = z.rows();
  const std::size_t d = z.cols();
  const double nn = static_cast<double>(n);
  Standardized s{DenseMatrix(n, d), std::vector<double>(d), std::vector<bool>(d)};
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += z(i, j);
    mean /= nn;
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (z(i, j) - mean) * (z(i, j) - mean);
    var /= nn;
    if (var == 0.0) {
      throw Error(ErrorCode::kNumeric,
                  "cca_loss: embedding column " + std::to_string(j) + " has zero variance (collapsed)");
    }
    double sd = std::sqrt(var);
    s.floored[j] = sd < kStdFloor;
    if (s.floored[j]) sd = kStdFloor;
    s.std_dev[j] = sd;
    const double denom = sd * std::sqrt(nn);
    for (std::size_t i = 0; i < n; ++i) s.values(i, j) = (z(i, j) - mean) / denom;
  }
  return s;
}

// Pulls d loss / d Zs back to d loss / d Z.
DenseMatrix standardize_backward(const Standardized& s, const DenseMatrix& grad_s) {
  const std::size_t n = grad_s.rows();
  const std::size_t d = grad_s.cols();
  const double nn = static_cast<double>(n);
  const double root_n = std::sqrt(nn);
  DenseMatrix grad(n, d);
  for (std::size_t j = 0; j < d; ++j) {
    // xhat = Zs * sqrt(N) is the unit-variance column; dL/dxhat = grad_s / sqrt(N).
    double mean_g = 0.0, mean_gx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grad_s(i, j) / root_n;
      mean_g += g;
      mean_gx += g * s.values(i, j) * root_n;
    }
    mean_g /= nn;
    mean_gx /= nn;
    const double inv_sd = 1.0 / s.std_dev[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grad_s(i, j) / root_n;
      const double xhat = s.values(i, j) * root_n;
      grad(i, j) = s.floored[j] ? inv_sd * (g - mean_g) : inv_sd * (g - mean_g - xhat * mean_gx);
    }
  }
  return grad;
}

// ||Zs^T Zs - I||^2 and its gradient 4 Zs (Zs^T Zs - I).
double decorrelation(const DenseMatrix& zs, DenseMatrix* grad) {
  DenseMatrix c = matmul_tn(zs, zs);
  for (std::size_t k = 0; k < c.rows(); ++k) c(k, k) -= 1.0;
  if (grad != nullptr) {
    *grad = matmul(zs, c);
    scale(*grad, 4.0);
  }
  return frobenius_sq(c);
}

SparsePropagator view_propagator(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<AdjacencyEntry> entries;
  entries.reserve(edges.size());
  for (const Edge& e : edges) entries.push_back({e.u, e.v});
  return normalize_adjacency(n, entries, NormalizationMode::kSymmetric);
}

}  // namespace

GraphView augment_view(const GraphDataset& graph, double edge_drop, double feature_mask, Rng& rng) {
  if (edge_drop < 0.0 || edge_drop >= 1.0 || feature_mask < 0.0 || feature_mask >= 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "augment_view: rates must lie in [0, 1)");
  }
  GraphView view;
  std::bernoulli_distribution drop(edge_drop);
  view.edges.reserve(graph.edges.size());
  for (const Edge& e : graph.edges) {
    if (!drop(rng)) view.edges.push_back(e);
  }
  view.features = graph.features;
  std::bernoulli_distribution mask(feature_mask);
  for (std::size_t j = 0; j < graph.n_features(); ++j) {
    if (!mask(rng)) continue;
    for (std::size_t i = 0; i < graph.n_nodes; ++i) view.features(i, j) = 0.0;
  }
  return view;
}

CcaLoss cca_loss(const DenseMatrix& z1, const DenseMatrix& z2, double lambda) {
  require_same_shape(z1, z2, "cca_loss");
  if (z1.rows() < 2) throw Error(ErrorCode::kInvalidArgument, "cca_loss: need at least 2 rows");
  const Standardized s1 = standardize(z1);
  const Standardized s2 = standardize(z2);

  CcaLoss out;
  DenseMatrix diff = s1.values;
  axpy(-1.0, s2.values, diff);
  out.invariance = frobenius_sq(diff);

  DenseMatrix grad_dec1, grad_dec2;
  out.decorrelation = decorrelation(s1.values, &grad_dec1) + decorrelation(s2.values, &grad_dec2);
  out.loss = out.invariance + lambda * out.decorrelation;

  DenseMatrix g1 = diff;
  scale(g1, 2.0);
  DenseMatrix g2 = diff;
  scale(g2, -2.0);
  axpy(lambda, grad_dec1, g1);
  axpy(lambda, grad_dec2, g2);
  out.grad_first = standardize_backward(s1, g1);
  out.grad_second = standardize_backward(s2, g2);
  return out;
}

EmbeddingModel train_embedding(const GraphDataset& graph, const EmbeddingConfig& config) {
  if (config.output_dim < 2) throw Error(ErrorCode::kInvalidArgument, "embedding output_dim must be >= 2");
  if (graph.n_nodes < 2) throw Error(ErrorCode::kInvalidArgument, "train_embedding: need >= 2 nodes");
  Rng init_rng = make_stream(config.seed, stream::kEmbedding);
  Rng aug_rng = make_stream(config.seed, stream::kEmbedding + 100);

  EmbeddingModel model;
  model.config = config;
  model.params = GcnParams::glorot(graph.n_features(), config.hidden_dim, config.output_dim, init_rng);
  Adam adam({.lr = config.lr, .weight_decay = config.weight_decay});

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const GraphView v1 = augment_view(graph, config.edge_drop, config.feature_mask, aug_rng);
    const GraphView v2 = augment_view(graph, config.edge_drop, config.feature_mask, aug_rng);
    const SparsePropagator p1 = view_propagator(graph.n_nodes, v1.edges);
    const SparsePropagator p2 = view_propagator(graph.n_nodes, v2.edges);

    GcnCache c1, c2;
    const DenseMatrix z1 = gcn_forward(model.params, p1, v1.features, &c1);
    const DenseMatrix z2 = gcn_forward(model.params, p2, v2.features, &c2);
    const CcaLoss loss = cca_loss(z1, z2, config.lambda);
    if (!std::isfinite(loss.loss)) {
      throw Error(ErrorCode::kNumeric, "train_embedding: loss diverged at epoch " + std::to_string(epoch));
    }
    model.curve.push_back({epoch, loss.loss, loss.invariance, loss.decorrelation});

    GcnGradients grads = gcn_backward(model.params, c1, loss.grad_first);
    grads.accumulate(gcn_backward(model.params, c2, loss.grad_second));
    const std::array<DenseMatrix*, 4> params = {&model.params.first.weight, &model.params.first.bias,
                                                &model.params.second.weight, &model.params.second.bias};
    const std::array<const DenseMatrix*, 4> g = {&grads.first.weight, &grads.first.bias,
                                                 &grads.second.weight, &grads.second.bias};
    adam.step(params, g);
    ++model.params.version;
  }
  return model;
}

void write_embedding_curve_csv(const EmbeddingModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.precision(17);
  out << "epoch,loss,invariance,decorrelation\n";
  for (const auto& e : model.curve) {
    out << e.epoch << ',' << e.loss << ',' << e.invariance << ',' << e.decorrelation << '\n';
  }
}

void save_embedding_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  const std::array<const DenseMatrix*, 4> tensors = {&model.params.first.weight, &model.params.first.bias,
                                                     &model.params.second.weight, &model.params.second.bias};
  save_tensors(path, tensors);
}

EmbeddingModel load_embedding_model(const std::filesystem::path& path, const EmbeddingConfig& config) {
  auto tensors = load_tensors(path);
  if (tensors.size() != 4) throw Error(ErrorCode::kFormat, "embedding model expects 4 tensors");
  EmbeddingModel model;
  model.config = config;
  model.params.first = {std::move(tensors[0]), std::move(tensors[1])};
  model.params.second = {std::move(tensors[2]), std::move(tensors[3])};
  return model;
}

}  // namespace causalmp
