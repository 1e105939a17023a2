#pragma once

#include <cstdint>
#include <optional>

#include "causalmp/matrix.hpp"
#include "causalmp/rng.hpp"
#include "causalmp/sparse.hpp"

namespace causalmp {

struct LayerParams {
  DenseMatrix weight;  // d_in x d_out
  DenseMatrix bias;    // 1 x d_out

  static LayerParams glorot(std::size_t d_in, std::size_t d_out, Rng& rng);
  static LayerParams zeros(std::size_t d_in, std::size_t d_out);
};

// Two aggregation layers: Z = P relu(P X W1 + b1) W2 + b2.
struct GcnParams {
  LayerParams first;
  LayerParams second;
  // Bumped on every in-place update so forward caches can detect staleness.
  std::uint64_t version = 0;

  static GcnParams glorot(std::size_t d_in, std::size_t d_hidden, std::size_t d_out, Rng& rng);

  std::size_t input_dim() const { return first.weight.rows(); }
  std::size_t hidden_dim() const { return first.weight.cols(); }
  std::size_t output_dim() const { return second.weight.cols(); }
};

// Intermediates of one forward call. The input matrix and propagator are
// referenced, not copied; both must outlive the cache.
struct GcnCache {
  const DenseMatrix* input = nullptr;
  const SparsePropagator* propagator = nullptr;
  DenseMatrix pre_activation;  // P X W1 + b1
  DenseMatrix hidden;          // relu(pre_activation)
  std::uint64_t params_version = 0;
  bool valid = false;
};

struct GcnGradients {
  LayerParams first;
  LayerParams second;
  std::optional<DenseMatrix> input;

  static GcnGradients zeros_like(const GcnParams& params);
  void accumulate(const GcnGradients& other);
};

DenseMatrix gcn_forward(const GcnParams& params, const SparsePropagator& prop,
                        const DenseMatrix& x, GcnCache* cache = nullptr);

// Reverse mode through the two-layer stack. relu'(0) is taken as 0.
// Throws kStaleCache if params changed since the cached forward.
GcnGradients gcn_backward(const GcnParams& params, const GcnCache& cache,
                          const DenseMatrix& grad_output, bool want_input_grad = false);

}  // namespace causalmp
