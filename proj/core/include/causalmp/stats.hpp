#pragma once

#include <span>

namespace causalmp {

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n - 1); 0 for fewer than two values
  std::size_t count = 0;
};

Summary summarize(std::span<const double> values);

struct WelchTest {
  double z = 0.0;        // (mean_b - mean_a) / sqrt(var_a / n_a + var_b / n_b)
  double p_value = 1.0;  // two-sided, normal reference
};

// Requires at least two values per group and a nonzero pooled standard error.
WelchTest welch_z_test(std::span<const double> a, std::span<const double> b);

}  // namespace causalmp
