#include "causalmp/dependency.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "causalmp/error.hpp"
#include "causalmp/format.hpp"

namespace causalmp {

namespace {

struct Axis {
  std::vector<double> centers;
  double bandwidth = 0.0;
};

std::optional<Axis> make_axis(std::span<const double> v, std::size_t bins, double bandwidth_scale,
                              const std::optional<std::pair<double, double>>& fixed_range) {
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double range = hi - lo;
  if (!(range > 0.0)) return std::nullopt;

  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double h = std::max(1.06 * sd * std::pow(n, -0.2) * bandwidth_scale, 1e-6 * range);

  const double grid_lo = fixed_range ? fixed_range->first : lo - 3.0 * h;
  const double grid_hi = fixed_range ? fixed_range->second : hi + 3.0 * h;
  if (!(grid_hi > grid_lo)) throw Error(ErrorCode::kInvalidArgument, "kde: empty grid range");
  const double width = (grid_hi - grid_lo) / static_cast<double>(bins);
  Axis axis;
  axis.bandwidth = h;
  axis.centers.resize(bins);
  for (std::size_t a = 0; a < bins; ++a) axis.centers[a] = grid_lo + (static_cast<double>(a) + 0.5) * width;
  return axis;
}

// kernel[k * bins + a] = exp(-((c_a - v_k) / h)^2 / 2)
std::vector<double> kernel_table(const Axis& axis, std::span<const double> v) {
  const std::size_t bins = axis.centers.size();
  std::vector<double> table(v.size() * bins);
  for (std::size_t k = 0; k < v.size(); ++k) {
    for (std::size_t a = 0; a < bins; ++a) {
      const double z = (axis.centers[a] - v[k]) / axis.bandwidth;
      table[k * bins + a] = std::exp(-0.5 * z * z);
    }
  }
  return table;
}

DependencyScore score_from_entropies(NodeId i, NodeId j, NodeId lo, NodeId hi,
                                     const ConditionalEntropies& ce) {
  // Grid x axis is `lo`, so y_given_x = H(hi | lo).
  DependencyScore s{i, j, std::abs(ce.y_given_x - ce.x_given_y), std::nullopt, std::nullopt};
  if (ce.y_given_x > ce.x_given_y) {
    s.cause = lo;
    s.effect = hi;
  } else if (ce.x_given_y > ce.y_given_x) {
    s.cause = hi;
    s.effect = lo;
  }
  return s;
}

}  // namespace

PairSamples collect_pair_samples(const InterventionBatch& batch, NodeId first, NodeId second) {
  if (batch.embeddings.empty()) throw Error(ErrorCode::kInvalidArgument, "collect_pair_samples: empty batch");
  if (first >= batch.n_nodes() || second >= batch.n_nodes()) {
    throw Error(ErrorCode::kInvalidArgument, "collect_pair_samples: node out of range");
  }
  PairSamples s{first, second, {}, {}};
  const std::size_t count = batch.repetitions() * batch.dim();
  s.x.reserve(count);
  s.y.reserve(count);
  for (const DenseMatrix& b : batch.embeddings) {
    const auto ri = b.row(first);
    const auto rj = b.row(second);
    s.x.insert(s.x.end(), ri.begin(), ri.end());
    s.y.insert(s.y.end(), rj.begin(), rj.end());
  }
  return s;
}

JointGrid::JointGrid(std::size_t bins, std::vector<double> masses) : bins_(bins), masses_(std::move(masses)) {
  if (masses_.size() != bins_ * bins_) throw Error(ErrorCode::kShape, "JointGrid: expected bins^2 masses");
}

std::vector<double> JointGrid::marginal_x() const {
  std::vector<double> m(bins_, 0.0);
  for (std::size_t a = 0; a < bins_; ++a)
    for (std::size_t b = 0; b < bins_; ++b) m[a] += (*this)(a, b);
  return m;
}

std::vector<double> JointGrid::marginal_y() const {
  std::vector<double> m(bins_, 0.0);
  for (std::size_t a = 0; a < bins_; ++a)
    for (std::size_t b = 0; b < bins_; ++b) m[b] += (*this)(a, b);
  return m;
}

std::optional<JointGrid> kde_joint_grid(const PairSamples& samples, const KdeOptions& options) {
  if (samples.x.size() != samples.y.size()) {
    throw Error(ErrorCode::kShape, "kde_joint_grid: unpaired samples");
  }
  if (samples.x.size() < 2) throw Error(ErrorCode::kInvalidArgument, "kde_joint_grid: need >= 2 samples");
  if (options.bins < 1) throw Error(ErrorCode::kInvalidArgument, "kde_joint_grid: bins must be >= 1");

  const auto ax = make_axis(samples.x, options.bins, options.bandwidth_scale, options.x_range);
  const auto ay = make_axis(samples.y, options.bins, options.bandwidth_scale, options.y_range);
  if (!ax || !ay) return std::nullopt;

  const std::size_t bins = options.bins;
  const std::vector<double> kx = kernel_table(*ax, samples.x);
  const std::vector<double> ky = kernel_table(*ay, samples.y);
  std::vector<double> grid(bins * bins, 0.0);
  for (std::size_t k = 0; k < samples.x.size(); ++k) {
    const double* rowx = kx.data() + k * bins;
    const double* rowy = ky.data() + k * bins;
    for (std::size_t a = 0; a < bins; ++a) {
      const double wx = rowx[a];
      if (wx == 0.0) continue;
      double* cell = grid.data() + a * bins;
      for (std::size_t b = 0; b < bins; ++b) cell[b] += wx * rowy[b];
    }
  }
  const double total = std::accumulate(grid.begin(), grid.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) return std::nullopt;
  for (double& v : grid) v /= total;
  return JointGrid(bins, std::move(grid));
}

double entropy(std::span<const double> masses) {
  double h = 0.0;
  for (double p : masses) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

ConditionalEntropies conditional_entropies(const JointGrid& grid) {
  const double hxy = entropy(grid.masses());
  const double hx = entropy(grid.marginal_x());
  const double hy = entropy(grid.marginal_y());
  return {hxy - hx, hxy - hy};
}

double mutual_information(const JointGrid& grid) {
  const double mi = entropy(grid.marginal_x()) + entropy(grid.marginal_y()) - entropy(grid.masses());
  return std::max(mi, 0.0);
}

DependencyScore delta_h(const InterventionBatch& batch, NodeId i, NodeId j, const KdeOptions& options) {
  const NodeId lo = std::min(i, j);
  const NodeId hi = std::max(i, j);
  const auto grid = kde_joint_grid(collect_pair_samples(batch, lo, hi), options);
  if (!grid) return DependencyScore{i, j, 0.0, std::nullopt, std::nullopt};
  return score_from_entropies(i, j, lo, hi, conditional_entropies(*grid));
}

double mutual_information(const InterventionBatch& batch, NodeId i, NodeId j, const KdeOptions& options) {
  const auto grid = kde_joint_grid(collect_pair_samples(batch, std::min(i, j), std::max(i, j)), options);
  return grid ? mutual_information(*grid) : 0.0;
}

ThresholdStats compute_threshold(std::span<const double> scores, double lambda) {
  if (scores.empty()) throw Error(ErrorCode::kInvalidArgument, "compute_threshold: empty score list");
  const double n = static_cast<double>(scores.size());
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / n);
  return {mean, sd, lambda, mean + lambda * sd};
}

void write_dependency_header(std::ostream& out) { out << "iteration,i,j,delta,cause,effect\n"; }

void write_dependency_rows(std::ostream& out, int iteration, std::span<const DependencyScore> scores) {
  for (const auto& s : scores) {
    out << iteration << ',' << s.i << ',' << s.j << ',' << format_double(s.delta) << ',';
    if (s.cause) out << *s.cause;
    out << ',';
    if (s.effect) out << *s.effect;
    out << '\n';
  }
}

void write_mi_header(std::ostream& out) { out << "iteration,i,j,mi\n"; }

void write_mi_rows(std::ostream& out, int iteration, std::span<const MiScore> scores) {
  for (const auto& s : scores) out << iteration << ',' << s.i << ',' << s.j << ',' << format_double(s.mi) << '\n';
}

}  // namespace causalmp
