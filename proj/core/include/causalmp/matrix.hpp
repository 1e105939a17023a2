#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace causalmp {

// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  void fill(double v);
  bool all_finite() const noexcept;
  bool same_shape(const DenseMatrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// a * b. Zero entries of `a` are skipped, which makes bag-of-words feature
// products cheap.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// a^T * b
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
// a * b^T
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

// Adds the 1 x cols row vector `bias` to every row of m.
void add_row_broadcast(DenseMatrix& m, const DenseMatrix& bias);
DenseMatrix column_sums(const DenseMatrix& m);
// y += alpha * x
void axpy(double alpha, const DenseMatrix& x, DenseMatrix& y);
void scale(DenseMatrix& m, double alpha);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);

double frobenius_sq(const DenseMatrix& m);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what);

}  // namespace causalmp
