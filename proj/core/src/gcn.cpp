#include "causalmp/gcn.hpp"

#include <cmath>

#include "causalmp/error.hpp"

namespace causalmp {

namespace {

// P (A W) + b, choosing the multiplication order that keeps the sparse product narrow.
DenseMatrix aggregate(const SparsePropagator& prop, const DenseMatrix& a, const LayerParams& layer) {
  if (a.cols() != layer.weight.rows()) {
    throw Error(ErrorCode::kShape, "gcn layer: input width does not match weight rows");
  }
  DenseMatrix out = layer.weight.rows() > layer.weight.cols()
                        ? prop.apply(matmul(a, layer.weight))
                        : matmul(prop.apply(a), layer.weight);
  add_row_broadcast(out, layer.bias);
  return out;
}

}  // namespace

LayerParams LayerParams::glorot(std::size_t d_in, std::size_t d_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(d_in + d_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  LayerParams p = zeros(d_in, d_out);
  for (double& v : p.weight.values()) v = dist(rng);
  return p;
}

LayerParams LayerParams::zeros(std::size_t d_in, std::size_t d_out) {
  return {DenseMatrix(d_in, d_out), DenseMatrix(1, d_out)};
}

GcnParams GcnParams::glorot(std::size_t d_in, std::size_t d_hidden, std::size_t d_out, Rng& rng) {
  GcnParams p;
  p.first = LayerParams::glorot(d_in, d_hidden, rng);
  p.second = LayerParams::glorot(d_hidden, d_out, rng);
  return p;
}

GcnGradients GcnGradients::zeros_like(const GcnParams& params) {
  return {LayerParams::zeros(params.input_dim(), params.hidden_dim()),
          LayerParams::zeros(params.hidden_dim(), params.output_dim()), std::nullopt};
}

void GcnGradients::accumulate(const GcnGradients& other) {
  axpy(1.0, other.first.weight, first.weight);
  axpy(1.0, other.first.bias, first.bias);
  axpy(1.0, other.second.weight, second.weight);
  axpy(1.0, other.second.bias, second.bias);
  if (other.input) {
    if (input) {
      axpy(1.0, *other.input, *input);
    } else {
      input = other.input;
    }
  }
}

DenseMatrix gcn_forward(const GcnParams& params, const SparsePropagator& prop, const DenseMatrix& x,
                        GcnCache* cache) {
  if (x.rows() != prop.n_nodes()) {
    throw Error(ErrorCode::kShape, "gcn_forward: feature rows do not match propagator size");
  }
  DenseMatrix pre = aggregate(prop, x, params.first);
  DenseMatrix hidden = pre;
  for (double& v : hidden.values()) v = v > 0.0 ? v : 0.0;
  DenseMatrix out = aggregate(prop, hidden, params.second);
  if (!out.all_finite()) throw Error(ErrorCode::kNumeric, "gcn_forward: non-finite output");
  if (cache != nullptr) {
    cache->input = &x;
    cache->propagator = &prop;
    cache->pre_activation = std::move(pre);
    cache->hidden = std::move(hidden);
    cache->params_version = params.version;
    cache->valid = true;
  }
  return out;
}

GcnGradients gcn_backward(const GcnParams& params, const GcnCache& cache,
                          const DenseMatrix& grad_output, bool want_input_grad) {
  if (!cache.valid || cache.params_version != params.version || cache.input == nullptr) {
    throw Error(ErrorCode::kStaleCache, "gcn_backward: cache does not match current parameters");
  }
  const SparsePropagator& prop = *cache.propagator;
  if (grad_output.rows() != prop.n_nodes() || grad_output.cols() != params.output_dim()) {
    throw Error(ErrorCode::kShape, "gcn_backward: gradient shape mismatch");
  }
  GcnGradients g;

  // Layer 2: Z = P H W2 + b2.
  g.second.bias = column_sums(grad_output);
  const DenseMatrix grad_hw2 = prop.apply_transpose(grad_output);
  g.second.weight = matmul_tn(cache.hidden, grad_hw2);
  DenseMatrix grad_pre = matmul_nt(grad_hw2, params.second.weight);
  const auto pre = cache.pre_activation.values();
  auto gp = grad_pre.values();
  for (std::size_t i = 0; i < gp.size(); ++i) {
    if (!(pre[i] > 0.0)) gp[i] = 0.0;
  }

  // Layer 1: pre = P X W1 + b1.
  g.first.bias = column_sums(grad_pre);
  const DenseMatrix grad_xw1 = prop.apply_transpose(grad_pre);
  g.first.weight = matmul_tn(*cache.input, grad_xw1);
  if (want_input_grad) g.input = matmul_nt(grad_xw1, params.first.weight);
  return g;
}

}  // namespace causalmp
