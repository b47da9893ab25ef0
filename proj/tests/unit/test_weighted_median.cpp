#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "abc/errors.hpp"
#include "abc/random.hpp"
#include "abc/weighted_median.hpp"
#include "oracles.hpp"

using abc::weighted_median;

namespace {

double wm(std::vector<double> v, std::vector<double> w) { return weighted_median(v, w); }

}  // namespace

TEST_CASE("weighted median: documented examples") {
  CHECK(wm({1, 2, 3}, {1, 1, 1}) == 2);
  CHECK(wm({0.9, 0.1, 0.2}, {5, 0.1, 0.2}) == 0.9);
  CHECK(wm({1, 2}, {1, 1}) == 1);  // both indices qualify; the smaller wins
  CHECK(wm({7}, {0.3}) == 7);
  CHECK(wm({3, 1, 2}, {0, 0, 4}) == 2);
}

TEST_CASE("weighted median: errors") {
  CHECK_THROWS_AS(wm({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(wm({1, 2}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(wm({1, 2}, {1, -1}), std::invalid_argument);
  CHECK_THROWS_AS(wm({1, 2}, {1, std::numeric_limits<double>::infinity()}), std::invalid_argument);
  CHECK_THROWS_AS(wm({1, 2}, {0, 0}), abc::DegenerateWeights);
}

TEST_CASE("weighted median: agrees with the brute-force inequality scan") {
  abc::RandomStream rng(4242);
  int checked = 0;
  for (int t = 0; t < 10000; ++t) {
    const int n = 1 + static_cast<int>(rng.uniform() * 50);
    const bool integer_weights = t % 2 == 0;
    const bool tied_values = t % 3 == 0;
    std::vector<double> v(static_cast<std::size_t>(n));
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      v[i] = tied_values ? std::floor(rng.uniform() * 5) : rng.uniform();
      w[i] = integer_weights ? std::floor(rng.uniform() * 11) : 10 * rng.uniform();
    }
    if (std::accumulate(w.begin(), w.end(), 0.0) == 0.0) w[0] = 1.0;
    CHECK(weighted_median(v, w) == abc::oracle::weighted_median_brute_force(v, w));
    ++checked;
  }
  CHECK(checked == 10000);
}

TEST_CASE("weighted median: presorted form matches and is scale invariant") {
  abc::RandomStream rng(7);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 40);
    std::vector<double> v(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = rng.uniform();
      w[i] = t % 2 ? std::floor(rng.uniform() * 4) : rng.uniform();
    }
    if (std::accumulate(w.begin(), w.end(), 0.0) == 0.0) w[0] = 2.0;
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0U);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> sorted(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sorted[i] = v[order[i]];
      total += w[order[i]];
    }
    const double expected = weighted_median(v, w);
    CHECK(abc::weighted_median_presorted(sorted, order, w, total) == expected);
    for (double c : {0.25, 4.0, 1024.0}) {
      std::vector<double> scaled(w);
      for (auto& x : scaled) x *= c;
      CHECK(weighted_median(v, scaled) == expected);
    }
  }
}
