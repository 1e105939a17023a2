#include "causalmp/stats.hpp"

#include <cmath>
#include <numeric>

#include "causalmp/error.hpp"

namespace causalmp {

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return s;
}

WelchTest welch_z_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "welch_z_test: each group needs at least two values");
  }
  const Summary sa = summarize(a);
  const Summary sb = summarize(b);
  const double se = std::sqrt(sa.stddev * sa.stddev / static_cast<double>(sa.count) +
                              sb.stddev * sb.stddev / static_cast<double>(sb.count));
  if (!(se > 0.0)) throw Error(ErrorCode::kNumeric, "welch_z_test: zero standard error");
  WelchTest t;
  t.z = (sb.mean - sa.mean) / se;
  t.p_value = std::erfc(std::abs(t.z) / std::sqrt(2.0));
  return t;
}

}  // namespace causalmp
