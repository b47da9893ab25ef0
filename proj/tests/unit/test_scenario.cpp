#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "abc/scenario.hpp"
#include "abc/special_functions.hpp"

using namespace abc;

TEST_CASE("fixed scenarios carry the published curves") {
  const auto& s = fixed_scenarios();
  REQUIRE(s.size() == 6);
  CHECK(s[0].true_probs == std::vector<double>{0.05, 0.10, 0.20, 0.30, 0.50, 0.70});
  CHECK(s[1].true_probs == std::vector<double>{0.30, 0.40, 0.52, 0.61, 0.76, 0.87});
  CHECK(s[2].true_probs == std::vector<double>{0.05, 0.06, 0.08, 0.11, 0.19, 0.34});
  CHECK(s[3].true_probs == std::vector<double>{0.06, 0.08, 0.12, 0.18, 0.40, 0.71});
  CHECK(s[4].true_probs == std::vector<double>{0.001, 0.002, 0.03, 0.05, 0.11, 0.22});
  CHECK(s[5].true_probs == std::vector<double>{0.125, 0.400, 0.667});
  for (int i = 0; i < 5; ++i) CHECK(s[static_cast<std::size_t>(i)].target == 0.20);
  CHECK(s[5].target == 0.25);

  const std::vector<int> mtd{3, 0, 5, 4, 6, 1};
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].mtd_index == mtd[i]);
    CHECK_NOTHROW(validate(s[i]));
  }
  CHECK(find_fixed_scenario("fixed:1")->mtd_index == 3);
  CHECK(find_fixed_scenario("real")->num_doses() == 3);
  CHECK_FALSE(find_fixed_scenario("fixed:9").has_value());
}

TEST_CASE("true MTD index rule") {
  CHECK(true_mtd_index({0.05, 0.10, 0.20, 0.30}, 0.2) == 3);
  CHECK(true_mtd_index({0.30, 0.40}, 0.2) == 0);
  CHECK(true_mtd_index({0.24, 0.40}, 0.2) == 1);  // within the margin
  CHECK(true_mtd_index({0.125, 0.375, 0.5}, 0.25) == 1);  // tie goes to the lower dose
}

TEST_CASE("scenario validation") {
  Scenario s{{0.1, 0.1, 0.3}, 0.2, "flat", 0};
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s = {{0.0, 0.1, 0.3}, 0.2, "zero", 2};
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s = {{0.1, 0.2, 0.3}, 0.2, "wrong-mtd", 3};
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
}

TEST_CASE("random scenarios are strictly increasing with a uniform MTD") {
  ScenarioGenSpec spec;
  RandomStream rng(123);
  std::vector<int> counts(5, 0);
  const double z = normal_quantile(spec.target);
  const double lo = normal_cdf(z - 4 * spec.sigma0);
  const double hi = normal_cdf(z + 4 * spec.sigma0);
  int outside = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const Scenario s = generate_random_scenario(spec, rng);
    REQUIRE(s.num_doses() == 5);
    REQUIRE(s.mtd_index >= 1);
    REQUIRE(s.mtd_index <= 5);
    ++counts[static_cast<std::size_t>(s.mtd_index - 1)];
    if (i < 10000) {
      for (std::size_t k = 1; k < 5; ++k) REQUIRE(s.true_probs[k] > s.true_probs[k - 1]);
      for (double p : s.true_probs) {
        REQUIRE(p > 0.0);
        REQUIRE(p < 1.0);
      }
    }
    const double pm = s.true_probs[static_cast<std::size_t>(s.mtd_index - 1)];
    if (pm < lo || pm > hi) ++outside;
  }
  CHECK(outside <= draws / 10000);
  double chi2 = 0.0;
  const double expected = draws / 5.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 13.2767);  // chi-square(4) upper 1% point
}

TEST_CASE("random scenario degenerate cases") {
  ScenarioGenSpec spec;
  spec.num_doses = 1;
  RandomStream rng(5);
  const Scenario one = generate_random_scenario(spec, rng);
  CHECK(one.num_doses() == 1);
  CHECK(one.mtd_index == 1);

  spec.num_doses = 4;
  spec.sigma0 = 1e-14;
  for (int i = 0; i < 20; ++i) {
    const Scenario s = generate_random_scenario(spec, rng);
    CHECK(s.true_probs[static_cast<std::size_t>(s.mtd_index - 1)] == doctest::Approx(spec.target).epsilon(1e-12));
  }
  spec.sigma0 = 0.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("neighbor gap uses the available neighbors") {
  CHECK(neighbor_gap({{0.1, 0.3, 0.6}, 0.3, "", 2}) == doctest::Approx(0.25));
  CHECK(neighbor_gap({{0.3, 0.5, 0.6}, 0.3, "", 1}) == doctest::Approx(0.2));
  CHECK(neighbor_gap({{0.1, 0.2, 0.3}, 0.3, "", 3}) == doctest::Approx(0.1));
  CHECK(std::isnan(neighbor_gap({{0.3}, 0.3, "", 1})));
}

TEST_CASE("Delta grows with mu") {
  ScenarioGenSpec spec;
  double prev = 0.0;
  for (double mu : {0.0, 0.1, 0.2, 0.3, 0.5, 0.8, 1.2}) {
    spec.mu = mu;
    const double d = measure_delta(spec, 4000, 77);
    CHECK(d >= prev);
    prev = d;
  }
}

TEST_CASE("calibration") {
  ScenarioGenSpec spec;
  CalibrationOptions opt;
  opt.draws = 4000;

  const double mu = calibrate_mu(spec, 0.10, 9, opt);
  ScenarioGenSpec at = spec;
  at.mu = mu;
  CHECK(std::fabs(measure_delta(at, opt.draws, 9) - 0.10) < 0.005);

  at.mu = 0.0;
  const double floor_delta = measure_delta(at, opt.draws, 9);
  CHECK(calibrate_mu(spec, floor_delta, 9, opt) == doctest::Approx(0.0).epsilon(1e-6));

  CHECK_THROWS_AS(calibrate_mu(spec, 0.01, 9, opt), UnreachableTarget);
}

TEST_CASE("scenario text format round trip") {
  std::stringstream io;
  write_scenarios(io, fixed_scenarios());
  const auto back = read_scenarios(io);
  CHECK(back == fixed_scenarios());

  std::istringstream with_comments("# header\n\ncustom, 0.3, 0.1, 0.25, 0.5\n");
  const auto parsed = read_scenarios(with_comments);
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0].label == "custom");
  CHECK(parsed[0].mtd_index == 2);

  std::istringstream bad("x, 0.3, 0.1, abc\n");
  CHECK_THROWS_AS(read_scenarios(bad), std::invalid_argument);
  std::istringstream short_line("x, 0.3\n");
  CHECK_THROWS_AS(read_scenarios(short_line), std::invalid_argument);
}
