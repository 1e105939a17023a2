#include "causalmp/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "causalmp/error.hpp"

namespace causalmp {

namespace {

[[noreturn]] void shape_error(const char* what, const DenseMatrix& a, const DenseMatrix& b) {
  throw Error(ErrorCode::kShape, std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                                     std::to_string(a.cols()) + " vs " +
                                     std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw Error(ErrorCode::kShape, "DenseMatrix: value count does not match shape");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void DenseMatrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
  if (!a.same_shape(b)) shape_error(what, a, b);
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  DenseMatrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* dst = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* src = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) shape_error("matmul_tn", a, b);
  DenseMatrix out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* brow = b.row(r).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double ari = a(r, i);
      if (ari == 0.0) continue;
      double* dst = out.row(i).data();
      for (std::size_t j = 0; j < n; ++j) dst[j] += ari * brow[j];
    }
  }
  return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) shape_error("matmul_nt", a, b);
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto brow = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
      out(i, j) = acc;
    }
  }
  return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

void add_row_broadcast(DenseMatrix& m, const DenseMatrix& bias) {
  if (bias.rows() != 1 || bias.cols() != m.cols()) shape_error("add_row_broadcast", m, bias);
  const auto b = bias.row(0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) r[j] += b[j];
  }
}

DenseMatrix column_sums(const DenseMatrix& m) {
  DenseMatrix out(1, m.cols());
  auto dst = out.row(0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) dst[j] += r[j];
  }
  return out;
}

void axpy(double alpha, const DenseMatrix& x, DenseMatrix& y) {
  require_same_shape(x, y, "axpy");
  auto dst = y.values();
  const auto src = x.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += alpha * src[i];
}

void scale(DenseMatrix& m, double alpha) {
  for (double& v : m.values()) v *= alpha;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "hadamard");
  DenseMatrix out = a;
  auto dst = out.values();
  const auto src = b.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] *= src[i];
  return out;
}

double frobenius_sq(const DenseMatrix& m) {
  double acc = 0.0;
  for (double v : m.values()) acc += v * v;
  return acc;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  const auto x = a.values();
  const auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
  return worst;
}

}  // namespace causalmp
