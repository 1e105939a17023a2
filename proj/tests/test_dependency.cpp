#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "causalmp/dependency.hpp"
#include "causalmp/error.hpp"
#include "test_util.hpp"

using namespace causalmp;
using namespace causalmp::testing;

namespace {

double plogp(double p) { return p > 0.0 ? -p * std::log(p) : 0.0; }

// Batch whose node v holds `values[v]` laid out as M x D.
InterventionBatch batch_from(const std::vector<std::vector<double>>& values, std::size_t m, std::size_t d) {
  InterventionBatch b;
  for (std::size_t rep = 0; rep < m; ++rep) {
    DenseMatrix e(values.size(), d);
    for (std::size_t v = 0; v < values.size(); ++v)
      for (std::size_t k = 0; k < d; ++k) e(v, k) = values[v][rep * d + k];
    b.embeddings.push_back(e);
  }
  return b;
}

InterventionBatch random_batch(std::size_t nodes, std::size_t m, std::size_t d, Rng& rng) {
  std::vector<std::vector<double>> values(nodes);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> spread(0.2, 3.0);
  for (auto& v : values) {
    const double s = spread(rng);
    const bool skew = normal(rng) > 0.0;
    for (std::size_t k = 0; k < m * d; ++k) {
      const double z = normal(rng);
      v.push_back(skew ? s * z * z : s * z);
    }
  }
  return batch_from(values, m, d);
}

struct HistogramOracle {
  double hx, hy, hxy;
};

// Plain counting on integer cells; samples are cell indices.
HistogramOracle histogram_oracle(const std::vector<int>& xs, const std::vector<int>& ys) {
  std::map<int, double> px, py;
  std::map<std::pair<int, int>, double> pxy;
  const double w = 1.0 / static_cast<double>(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    px[xs[k]] += w;
    py[ys[k]] += w;
    pxy[{xs[k], ys[k]}] += w;
  }
  HistogramOracle o{0, 0, 0};
  for (auto& [k, p] : px) o.hx += plogp(p);
  for (auto& [k, p] : py) o.hy += plogp(p);
  for (auto& [k, p] : pxy) o.hxy += plogp(p);
  return o;
}

}  // namespace

TEST(PairSamples, PoolsRepetitionsAndCoordinates) {
  Rng rng = make_stream(1, 0);
  const InterventionBatch b = random_batch(4, 8, 16, rng);
  const PairSamples s = collect_pair_samples(b, 1, 3);
  ASSERT_EQ(s.x.size(), 128u);
  EXPECT_EQ(s.x[16 * 2 + 5], b.embeddings[2](1, 5));
  EXPECT_EQ(s.y[16 * 7 + 15], b.embeddings[7](3, 15));
  const PairSamples swapped = collect_pair_samples(b, 3, 1);
  EXPECT_EQ(swapped.x, s.y);
  EXPECT_EQ(swapped.y, s.x);
}

TEST(Kde, ReferenceGrid) {
  // Entropies from a numpy evaluation of the same rule (8 bins).
  const PairSamples s{0, 1, {0.1, 0.5, 0.9, 1.7, 2.2, 3.0}, {1.0, 0.2, 0.4, 2.5, 1.1, 0.3}};
  const auto grid = kde_joint_grid(s, {.bins = 8});
  ASSERT_TRUE(grid.has_value());
  EXPECT_NEAR(entropy(grid->marginal_x()), 1.690219608400769, 1e-12);
  EXPECT_NEAR(entropy(grid->marginal_y()), 1.657270593550326, 1e-12);
  EXPECT_NEAR(entropy(grid->masses()), 3.3111659868602064, 1e-12);
  const ConditionalEntropies ce = conditional_entropies(*grid);
  EXPECT_NEAR(ce.y_given_x, 1.6209463784594373, 1e-12);
  EXPECT_NEAR(ce.x_given_y, 1.6538953933098803, 1e-12);
  EXPECT_NEAR(mutual_information(*grid), 0.036324215090888679, 1e-12);
}

TEST(Kde, MassesNormalisedAndNonnegative) {
  Rng rng = make_stream(2, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const InterventionBatch b = random_batch(2, 8, 16, rng);
    const auto grid = kde_joint_grid(collect_pair_samples(b, 0, 1));
    ASSERT_TRUE(grid.has_value());
    double total = 0.0;
    for (double p : grid->masses()) {
      EXPECT_GE(p, 0.0);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    const double hxy = entropy(grid->masses());
    EXPECT_GE(hxy, std::max(entropy(grid->marginal_x()), entropy(grid->marginal_y())) - 1e-12);
  }
}

TEST(Kde, ZeroSpreadIsDegenerate) {
  const PairSamples s{0, 1, {1.0, 1.0, 1.0}, {0.0, 1.0, 2.0}};
  EXPECT_FALSE(kde_joint_grid(s).has_value());
  EXPECT_THROW(kde_joint_grid(PairSamples{0, 1, {1.0}, {2.0}}), Error);
  EXPECT_THROW(kde_joint_grid(PairSamples{0, 1, {1.0, 2.0}, {2.0}}), Error);
}

TEST(Kde, TwoPointsConcentrateInTwoCells) {
  const PairSamples s{0, 1, {0.0, 1.0}, {0.0, 1.0}};
  const auto grid = kde_joint_grid(s);
  ASSERT_TRUE(grid.has_value());
  // Silverman h for two points is about 0.65, so the bumps overlap but favour the diagonal quadrants.
  double diagonal = 0.0, anti = 0.0;
  const std::size_t b = grid->bins();
  for (std::size_t a = 0; a < b / 2; ++a)
    for (std::size_t c = 0; c < b / 2; ++c) {
      diagonal += (*grid)(a, c) + (*grid)(b - 1 - a, b - 1 - c);
      anti += (*grid)(a, b - 1 - c) + (*grid)(b - 1 - a, c);
    }
  EXPECT_NEAR(diagonal + anti, 1.0, 1e-12);
  EXPECT_GT(diagonal, 0.6);
  EXPECT_NEAR((*grid)(0, 0), (*grid)(b - 1, b - 1), 1e-15);
  EXPECT_NEAR((*grid)(0, b - 1), (*grid)(b - 1, 0), 1e-15);
}

TEST(Kde, IndependentUniformsFactorise) {
  Rng rng = make_stream(3, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PairSamples s{0, 1, {}, {}};
  for (int k = 0; k < 10000; ++k) {
    s.x.push_back(u(rng));
    s.y.push_back(u(rng));
  }
  const auto grid = kde_joint_grid(s);
  ASSERT_TRUE(grid.has_value());
  const auto mx = grid->marginal_x();
  const auto my = grid->marginal_y();
  double worst = 0.0;
  for (std::size_t a = 0; a < grid->bins(); ++a)
    for (std::size_t b = 0; b < grid->bins(); ++b) worst = std::max(worst, std::abs((*grid)(a, b) - mx[a] * my[b]));
  EXPECT_LE(worst, 0.01);
  EXPECT_LE(mutual_information(*grid), 0.02);
}

TEST(Kde, DegenerateBandwidthMatchesHistogramOracle) {
  Rng rng = make_stream(4, 0);
  constexpr std::size_t kBins = 32;
  std::uniform_int_distribution<int> cell(0, kBins - 1);
  std::binomial_distribution<int> lumpy(kBins - 1, 0.3);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> xs, ys;
    PairSamples s{0, 1, {}, {}};
    for (int k = 0; k < 1000; ++k) {
      const int a = cell(rng);
      const int b = trial % 2 == 0 ? lumpy(rng) : (a + lumpy(rng)) % static_cast<int>(kBins);
      xs.push_back(a);
      ys.push_back(b);
      s.x.push_back(a + 0.5);
      s.y.push_back(b + 0.5);
    }
    KdeOptions opts;
    opts.bins = kBins;
    opts.bandwidth_scale = 1e-3;
    opts.x_range = {0.0, static_cast<double>(kBins)};
    opts.y_range = {0.0, static_cast<double>(kBins)};
    const auto grid = kde_joint_grid(s, opts);
    ASSERT_TRUE(grid.has_value());
    const HistogramOracle o = histogram_oracle(xs, ys);
    EXPECT_NEAR(entropy(grid->marginal_x()), o.hx, 1e-6);
    EXPECT_NEAR(entropy(grid->marginal_y()), o.hy, 1e-6);
    EXPECT_NEAR(entropy(grid->masses()), o.hxy, 1e-6);
    const ConditionalEntropies ce = conditional_entropies(*grid);
    EXPECT_NEAR(ce.y_given_x, o.hxy - o.hx, 1e-6);
    EXPECT_NEAR(ce.x_given_y, o.hxy - o.hy, 1e-6);
    EXPECT_NEAR(mutual_information(*grid), o.hx + o.hy - o.hxy, 1e-6);
  }
}

TEST(Entropy, HandBuiltGrids) {
  const JointGrid g(2, {0.4, 0.1, 0.2, 0.3});
  const double hxy = plogp(0.4) + plogp(0.1) + plogp(0.2) + plogp(0.3);
  const double hx = 2 * plogp(0.5);
  const double hy = plogp(0.6) + plogp(0.4);
  const ConditionalEntropies ce = conditional_entropies(g);
  EXPECT_NEAR(ce.y_given_x, hxy - hx, 1e-12);
  EXPECT_NEAR(ce.x_given_y, hxy - hy, 1e-12);
  EXPECT_NEAR(std::abs(ce.y_given_x - ce.x_given_y), std::abs(hy - hx), 1e-12);

  const JointGrid perm(4, {0, 0.25, 0, 0, 0, 0, 0.25, 0, 0.25, 0, 0, 0, 0, 0, 0, 0.25});
  const ConditionalEntropies cp = conditional_entropies(perm);
  EXPECT_NEAR(cp.y_given_x, 0.0, 1e-15);
  EXPECT_NEAR(cp.x_given_y, 0.0, 1e-15);

  const JointGrid sym(2, {0.1, 0.3, 0.3, 0.3});
  const ConditionalEntropies cs = conditional_entropies(sym);
  EXPECT_NEAR(cs.y_given_x, cs.x_given_y, 1e-15);

  const JointGrid indep(2, {0.7 * 0.2, 0.7 * 0.8, 0.3 * 0.2, 0.3 * 0.8});
  EXPECT_NEAR(conditional_entropies(indep).y_given_x, plogp(0.2) + plogp(0.8), 1e-9);
  EXPECT_NEAR(entropy(std::vector<double>(32, 1.0 / 32)), std::log(32.0), 1e-14);
}

TEST(DeltaH, SwapInvariantAndOriented) {
  Rng rng = make_stream(5, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const InterventionBatch b = random_batch(3, 8, 16, rng);
    const DependencyScore ab = delta_h(b, 0, 2);
    const DependencyScore ba = delta_h(b, 2, 0);
    EXPECT_EQ(ab.delta, ba.delta);
    EXPECT_EQ(ab.cause, ba.cause);
    EXPECT_EQ(ab.effect, ba.effect);
    EXPECT_GE(ab.delta, 0.0);
    ASSERT_TRUE(ab.oriented());
    const auto grid = kde_joint_grid(collect_pair_samples(b, *ab.cause, *ab.effect));
    const ConditionalEntropies ce = conditional_entropies(*grid);
    EXPECT_GE(ce.y_given_x, ce.x_given_y);  // H(effect | cause) >= H(cause | effect)
    EXPECT_NEAR(ab.delta, ce.y_given_x - ce.x_given_y, 1e-12);
  }
}

TEST(DeltaH, IdenticalNodesAndConstantNodes) {
  Rng rng = make_stream(6, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(64);
  for (double& x : v) x = normal(rng);
  const InterventionBatch b = batch_from({v, v, std::vector<double>(64, 3.0)}, 4, 16);
  const DependencyScore same = delta_h(b, 0, 1);
  EXPECT_NEAR(same.delta, 0.0, 1e-12);
  const DependencyScore flat = delta_h(b, 0, 2);
  EXPECT_EQ(flat.delta, 0.0);
  EXPECT_FALSE(flat.oriented());
  EXPECT_EQ(mutual_information(b, 0, 2), 0.0);
}

TEST(MutualInformation, SymmetricAndSelfMaximal) {
  Rng rng = make_stream(7, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const InterventionBatch b = random_batch(3, 8, 16, rng);
    EXPECT_EQ(mutual_information(b, 0, 1), mutual_information(b, 1, 0));
    EXPECT_GE(mutual_information(b, 0, 1), 0.0);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(128), y(128);
  for (double& v : x) v = normal(rng);
  for (double& v : y) v = normal(rng);
  const InterventionBatch b = batch_from({x, x, y}, 8, 16);
  EXPECT_GT(mutual_information(b, 0, 1), mutual_information(b, 0, 2));
}

TEST(MutualInformation, SelfInformationOnHistogramGrid) {
  Rng rng = make_stream(8, 0);
  std::uniform_int_distribution<int> cell(0, 31);
  PairSamples s{0, 1, {}, {}};
  for (int k = 0; k < 500; ++k) {
    const double c = cell(rng) + 0.5;
    s.x.push_back(c);
    s.y.push_back(c);
  }
  KdeOptions opts;
  opts.bandwidth_scale = 1e-3;
  opts.x_range = opts.y_range = std::pair{0.0, 32.0};
  const auto grid = kde_joint_grid(s, opts);
  EXPECT_NEAR(mutual_information(*grid), entropy(grid->marginal_x()), 1e-9);
}

TEST(Threshold, MeanPlusLambdaPopulationStd) {
  const std::vector<double> a = {1, 2, 3};
  const ThresholdStats t0 = compute_threshold(a, 0.0);
  EXPECT_DOUBLE_EQ(t0.threshold, 2.0);
  EXPECT_FALSE(t0.selects(2.0));
  EXPECT_TRUE(t0.selects(3.0));

  const std::vector<double> b = {0, 0, 0, 4};
  const ThresholdStats t1 = compute_threshold(b, 1.0);
  EXPECT_NEAR(t1.threshold, 1.0 + std::sqrt(3.0), 1e-15);
  EXPECT_TRUE(t1.selects(4.0));

  const std::vector<double> flat = {0.5, 0.5, 0.5};
  const ThresholdStats t2 = compute_threshold(flat, 2.0);
  EXPECT_EQ(t2.stddev, 0.0);
  EXPECT_FALSE(t2.selects(0.5));
  EXPECT_THROW(compute_threshold(std::vector<double>{}, 1.0), Error);
}

TEST(ScoreCsv, Layout) {
  std::ostringstream out;
  write_dependency_header(out);
  const std::vector<DependencyScore> scores = {{1, 2, 0.5, 2, 1}, {3, 4, 0.0, std::nullopt, std::nullopt}};
  write_dependency_rows(out, 3, scores);
  EXPECT_EQ(out.str(), "iteration,i,j,delta,cause,effect\n3,1,2,0.5,2,1\n3,3,4,0,,\n");
  std::ostringstream mi;
  write_mi_header(mi);
  const std::vector<MiScore> ms = {{0, 5, 0.25}};
  write_mi_rows(mi, 1, ms);
  EXPECT_EQ(mi.str(), "iteration,i,j,mi\n1,0,5,0.25\n");
}
