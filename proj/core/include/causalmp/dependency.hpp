#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "causalmp/intervention.hpp"
#include "causalmp/types.hpp"

namespace causalmp {

// Paired scalar observations for a node pair, pooled over repetitions and
// embedding coordinates: sample (m, d) = (B[m][first][d], B[m][second][d]).
struct PairSamples {
  NodeId first = 0;
  NodeId second = 0;
  std::vector<double> x;  // observations of `first`
  std::vector<double> y;  // observations of `second`
};

PairSamples collect_pair_samples(const InterventionBatch& batch, NodeId first, NodeId second);

struct KdeOptions {
  std::size_t bins = 32;
  // Multiplies the Silverman bandwidth; the 1e-6 * range floor still applies.
  double bandwidth_scale = 1.0;
  // Fixed grid bounds per axis instead of [min - 3h, max + 3h].
  std::optional<std::pair<double, double>> x_range;
  std::optional<std::pair<double, double>> y_range;
};

// Normalised bins x bins probability masses; index (a, b) has `a` on the x
// (first) axis.
class JointGrid {
 public:
  JointGrid(std::size_t bins, std::vector<double> masses);

  std::size_t bins() const noexcept { return bins_; }
  double operator()(std::size_t a, std::size_t b) const { return masses_[a * bins_ + b]; }
  std::span<const double> masses() const noexcept { return masses_; }
  std::vector<double> marginal_x() const;
  std::vector<double> marginal_y() const;

 private:
  std::size_t bins_;
  std::vector<double> masses_;
};

// Product-Gaussian KDE evaluated at cell centres, masses normalised to 1.
// Per-axis bandwidth h = 1.06 * sd * n^(-1/5) (sample sd), floored at
// 1e-6 * range. Returns nullopt when an axis has zero spread.
std::optional<JointGrid> kde_joint_grid(const PairSamples& samples, const KdeOptions& options = {});

// Shannon entropy in nats, 0 log 0 = 0.
double entropy(std::span<const double> masses);

struct ConditionalEntropies {
  double y_given_x = 0.0;  // H(second | first)
  double x_given_y = 0.0;  // H(first | second)
};

ConditionalEntropies conditional_entropies(const JointGrid& grid);
// H(x) + H(y) - H(x, y), clamped at 0.
double mutual_information(const JointGrid& grid);

// delta = |H(j|i) - H(i|j)|. The cause is the endpoint whose conditioning
// leaves the larger entropy in its partner, so H(effect|cause) >= H(cause|effect).
// Degenerate pairs and exact ties carry no orientation.
struct DependencyScore {
  NodeId i = 0;
  NodeId j = 0;
  double delta = 0.0;
  std::optional<NodeId> cause;
  std::optional<NodeId> effect;

  bool oriented() const { return cause.has_value(); }
};

// Invariant under swapping (i, j): both orders evaluate the canonical pair.
DependencyScore delta_h(const InterventionBatch& batch, NodeId i, NodeId j,
                        const KdeOptions& options = {});

struct MiScore {
  NodeId i = 0;
  NodeId j = 0;
  double mi = 0.0;
};

double mutual_information(const InterventionBatch& batch, NodeId i, NodeId j,
                          const KdeOptions& options = {});

struct ThresholdStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  double lambda = 0.0;
  double threshold = 0.0;

  bool selects(double score) const { return score > threshold; }
};

ThresholdStats compute_threshold(std::span<const double> scores, double lambda);

void write_dependency_header(std::ostream& out);
void write_dependency_rows(std::ostream& out, int iteration, std::span<const DependencyScore> scores);
void write_mi_header(std::ostream& out);
void write_mi_rows(std::ostream& out, int iteration, std::span<const MiScore> scores);

}  // namespace causalmp
