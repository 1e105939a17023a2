#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "causalmp/matrix.hpp"
#include "causalmp/types.hpp"

namespace causalmp {

// A(row, col) = 1 means node `row` receives the message of node `col`,
// i.e. (A X)_row = sum_col A(row, col) X_col.
struct AdjacencyEntry {
  NodeId row = 0;
  NodeId col = 0;
  friend auto operator<=>(const AdjacencyEntry&, const AdjacencyEntry&) = default;
};

enum class NormalizationMode {
  kSymmetric,  // D^{-1/2} (S + I) D^{-1/2}, S the symmetrised pattern
  kInDegree,   // D_in^{-1} (A + I), keeps directed entries
};

// CSR form of a normalised adjacency with self-loops.
class SparsePropagator {
 public:
  SparsePropagator() = default;
  SparsePropagator(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<NodeId> col_idx,
                   std::vector<double> weights);

  std::size_t n_nodes() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return col_idx_.size(); }
  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const NodeId> col_idx() const noexcept { return col_idx_; }
  std::span<const double> weights() const noexcept { return weights_; }

  // P x
  DenseMatrix apply(const DenseMatrix& x) const;
  // P^T x
  DenseMatrix apply_transpose(const DenseMatrix& x) const;
  DenseMatrix to_dense() const;

  friend bool operator==(const SparsePropagator&, const SparsePropagator&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<NodeId> col_idx_;
  std::vector<double> weights_;
};

// Duplicate entries and self-loops in `entries` are ignored; the self-loop is
// always added with unit weight before normalising.
SparsePropagator normalize_adjacency(std::size_t n_nodes, std::span<const AdjacencyEntry> entries,
                                     NormalizationMode mode);

}  // namespace causalmp
