#include "causalmp/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "causalmp/error.hpp"

namespace causalmp {

SparsePropagator::SparsePropagator(std::size_t n, std::vector<std::size_t> row_ptr,
                                   std::vector<NodeId> col_idx, std::vector<double> weights)
    : n_(n), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
      weights_(std::move(weights)) {
  if (row_ptr_.size() != n_ + 1 || col_idx_.size() != weights_.size() ||
      row_ptr_.back() != col_idx_.size()) {
    throw Error(ErrorCode::kShape, "SparsePropagator: inconsistent CSR arrays");
  }
}

DenseMatrix SparsePropagator::apply(const DenseMatrix& x) const {
  if (x.rows() != n_) {
    throw Error(ErrorCode::kShape, "SparsePropagator::apply: expected " + std::to_string(n_) +
                                       " rows, got " + std::to_string(x.rows()));
  }
  DenseMatrix out(n_, x.cols());
  const std::size_t d = x.cols();
  for (std::size_t r = 0; r < n_; ++r) {
    double* dst = out.row(r).data();
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const double w = weights_[k];
      const double* src = x.row(col_idx_[k]).data();
      for (std::size_t j = 0; j < d; ++j) dst[j] += w * src[j];
    }
  }
  return out;
}

DenseMatrix SparsePropagator::apply_transpose(const DenseMatrix& x) const {
  if (x.rows() != n_) {
    throw Error(ErrorCode::kShape, "SparsePropagator::apply_transpose: row mismatch");
  }
  DenseMatrix out(n_, x.cols());
  const std::size_t d = x.cols();
  for (std::size_t r = 0; r < n_; ++r) {
    const double* src = x.row(r).data();
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const double w = weights_[k];
      double* dst = out.row(col_idx_[k]).data();
      for (std::size_t j = 0; j < d; ++j) dst[j] += w * src[j];
    }
  }
  return out;
}

DenseMatrix SparsePropagator::to_dense() const {
  DenseMatrix out(n_, n_);
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out(r, col_idx_[k]) = weights_[k];
  return out;
}

SparsePropagator normalize_adjacency(std::size_t n_nodes, std::span<const AdjacencyEntry> entries,
                                     NormalizationMode mode) {
  std::vector<AdjacencyEntry> pattern;
  pattern.reserve(entries.size() * (mode == NormalizationMode::kSymmetric ? 2 : 1) + n_nodes);
  for (const auto& e : entries) {
    if (e.row >= n_nodes || e.col >= n_nodes) {
      throw Error(ErrorCode::kInvalidArgument, "normalize_adjacency: node index out of range");
    }
    if (e.row == e.col) continue;
    pattern.push_back(e);
    if (mode == NormalizationMode::kSymmetric) pattern.push_back({e.col, e.row});
  }
  for (NodeId i = 0; i < n_nodes; ++i) pattern.push_back({i, i});
  std::sort(pattern.begin(), pattern.end());
  pattern.erase(std::unique(pattern.begin(), pattern.end()), pattern.end());

  std::vector<std::size_t> row_ptr(n_nodes + 1, 0);
  for (const auto& e : pattern) ++row_ptr[e.row + 1];
  for (std::size_t i = 0; i < n_nodes; ++i) row_ptr[i + 1] += row_ptr[i];

  std::vector<double> degree(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) degree[i] = static_cast<double>(row_ptr[i + 1] - row_ptr[i]);

  std::vector<NodeId> col_idx;
  std::vector<double> weights;
  col_idx.reserve(pattern.size());
  weights.reserve(pattern.size());
  for (const auto& e : pattern) {
    col_idx.push_back(e.col);
    if (mode == NormalizationMode::kSymmetric) {
      weights.push_back(1.0 / std::sqrt(degree[e.row] * degree[e.col]));
    } else {
      weights.push_back(1.0 / degree[e.row]);
    }
  }
  return SparsePropagator(n_nodes, std::move(row_ptr), std::move(col_idx), std::move(weights));
}

}  // namespace causalmp
