#include "abc/weighted_median.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "abc/errors.hpp"

namespace abc {

double weighted_median_presorted(std::span<const double> sorted_values,
                                 std::span<const std::uint32_t> order,
                                 std::span<const double> weights, double total) {
  if (sorted_values.empty()) throw std::invalid_argument("weighted_median: empty input");
  if (!(total > 0.0)) throw DegenerateWeights("weighted_median: total weight is zero");

  // The first index whose inclusive cumulative weight reaches W/2 is the
  // smallest index satisfying both inequalities: its prefix is < W/2 by
  // minimality and its suffix W - cum is <= W/2.
  const double half = 0.5 * total;
  double cum = 0.0;
  const std::size_t n = sorted_values.size();
  for (std::size_t i = 0; i < n; ++i) {
    cum += weights[order[i]];
    if (cum >= half) return sorted_values[i];
  }
  // Summation-order rounding can leave cum a few ulps short of W/2.
  return sorted_values[n - 1];
}

double weighted_median(std::span<const double> values, std::span<const double> weights) {
  if (values.empty()) throw std::invalid_argument("weighted_median: empty input");
  if (values.size() != weights.size()) {
    throw std::invalid_argument("weighted_median: values and weights differ in length");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("weighted_median: weights must be finite and nonnegative");
    }
  }

  std::vector<std::uint32_t> order(values.size());
  std::iota(order.begin(), order.end(), 0U);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });

  std::vector<double> sorted(values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted[i] = values[order[i]];
    total += weights[order[i]];
  }
  return weighted_median_presorted(sorted, order, weights, total);
}

}  // namespace abc
