#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <vector>

#include "abc/errors.hpp"
#include "abc/trial_sim.hpp"

using namespace abc;

namespace {

TrialConfig config_for(const Scenario& s, int jm = 2000) {
  TrialConfig c;
  c.num_doses = s.num_doses();
  c.target = s.target;
  c.samples_per_model = jm;
  c.max_patients = 36;
  return c;
}

void check_trial_invariants(const TrialResult& r, const TrialConfig& c) {
  int patients = 0;
  std::vector<int> m(static_cast<std::size_t>(c.num_doses), 0), y(m);
  for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
    const auto& step = r.trajectory[i];
    if (i == 0) CHECK(step.dose == c.start_dose);
    if (i > 0) CHECK(std::abs(step.dose - r.trajectory[i - 1].dose) <= 1);
    CHECK(step.dose >= 1);
    CHECK(step.dose <= c.num_doses);
    CHECK(step.dlts <= step.patients);
    m[static_cast<std::size_t>(step.dose - 1)] += step.patients;
    y[static_cast<std::size_t>(step.dose - 1)] += step.dlts;
    patients += step.patients;
  }
  CHECK(m == r.patient_counts);
  CHECK(y == r.dlt_counts);
  CHECK(patients <= c.max_patients);
  if (!r.stopped_early) {
    CHECK(patients == c.max_patients);
    CHECK(r.selected_mtd >= 1);
  } else {
    CHECK(r.selected_mtd == 0);
  }
}

}  // namespace

TEST_CASE("trials respect the dose-step bound and conserve patients") {
  for (const auto& s : fixed_scenarios()) {
    const TrialConfig c = config_for(s);
    const PriorBank bank = generate_bank(c, 3);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      RandomStream rng(seed);
      check_trial_invariants(run_trial(s, c, bank, rng), c);
    }
  }
}

TEST_CASE("a near-certainly toxic first dose stops the trial") {
  const Scenario s{{0.999999, 0.9999995, 0.9999999}, 0.25, "toxic", 0};
  const TrialConfig c = config_for(s);
  const PriorBank bank = generate_bank(c, 3);
  RandomStream rng(1);
  const TrialResult r = run_trial(s, c, bank, rng);
  CHECK(r.stopped_early);
  CHECK(r.selected_mtd == 0);
  CHECK(r.trajectory.size() == 1);
}

TEST_CASE("37 patients in cohorts of 3 gives 13 cohorts, the last of one") {
  const Scenario s = *find_fixed_scenario("real");
  TrialConfig c = config_for(s);
  c.max_patients = 37;
  const PriorBank bank = generate_bank(c, 3);
  RandomStream rng(12);
  const TrialResult r = run_trial(s, c, bank, rng);
  REQUIRE_FALSE(r.stopped_early);
  CHECK(r.trajectory.size() == 13);
  CHECK(r.trajectory.back().patients == 1);
  CHECK(r.total_patients() == 37);
}

TEST_CASE("replaying the published walkthrough selects dose 1") {
  TrialConfig c;
  c.num_doses = 3;
  c.target = 0.25;
  c.max_patients = 37;
  const PriorBank bank = generate_bank(c, 2019);

  // 0/3 d1, 2/3 d2, 0/3 d1, 1/3 d2, 2/3 d2, then dose 1 to the end.
  std::vector<CohortRecord> cohorts{{1, 3, 0}, {2, 3, 2}, {1, 3, 0}, {2, 3, 1}, {2, 3, 2}};
  // The remaining 22 patients at dose 1 carry the last 3 DLTs: 7 cohorts of
  // 3 and a final single patient.
  const std::vector<int> tail_dlts{0, 1, 0, 1, 0, 0, 1, 0};
  for (std::size_t i = 0; i < tail_dlts.size(); ++i) {
    cohorts.push_back({1, i + 1 == tail_dlts.size() ? 1 : 3, tail_dlts[i]});
  }
  RandomStream rng(5);
  const TrialResult r = replay_trial(cohorts, c, bank, rng);
  CHECK(r.trajectory.size() == 13);
  CHECK(r.patient_counts == std::vector<int>{28, 9, 0});
  CHECK(r.dlt_counts == std::vector<int>{3, 5, 0});
  CHECK_FALSE(r.stopped_early);
  CHECK(r.selected_mtd == 1);
}

TEST_CASE("batch of one equals the single trial") {
  const Scenario s = fixed_scenarios()[0];
  const TrialConfig c = config_for(s);
  const PriorBank bank = generate_bank(c, 4);
  std::vector<TrialResult> trials;
  const BatchSummary b = run_batch(s, c, bank, 1, 77, 1, &trials);
  RandomStream rng(derive_seed(77, 0));
  const TrialResult single = run_trial(s, c, bank, rng);
  CHECK(trials.at(0).patient_counts == single.patient_counts);
  CHECK(b == summarize(s, std::vector<TrialResult>{single}));
  CHECK(b.replications == 1);
  const double total = single.total_patients();
  CHECK(b.dlt_pct == doctest::Approx(100.0 * single.total_dlts() / total));
  CHECK(b.mean_trial_dlt_pct == doctest::Approx(b.dlt_pct));
  for (std::size_t k = 0; k < b.selection_pct.size(); ++k) {
    CHECK(b.selection_pct[k] == (single.selected_mtd == static_cast<int>(k) + 1 ? 100.0 : 0.0));
    CHECK(b.mean_patients[k] == single.patient_counts[k]);
  }
}

TEST_CASE("batches are deterministic under any worker count") {
  const Scenario s = fixed_scenarios()[3];
  const TrialConfig c = config_for(s);
  const PriorBank bank = generate_bank(c, 4);
  const BatchSummary one = run_batch(s, c, bank, 24, 5, 1);
  CHECK(one == run_batch(s, c, bank, 24, 5, 1));
  CHECK(one == run_batch(s, c, bank, 24, 5, 3));
  CHECK(one == run_batch(s, c, bank, 24, 5, 8));
  CHECK_FALSE(one == run_batch(s, c, bank, 24, 6, 1));
  CHECK_THROWS_AS(run_batch(s, c, bank, 0, 5), std::invalid_argument);
}

TEST_CASE("summary percentages are consistent") {
  const Scenario s = fixed_scenarios()[1];
  const TrialConfig c = config_for(s);
  const PriorBank bank = generate_bank(c, 4);
  const BatchSummary b = run_batch(s, c, bank, 60, 8);
  const double sel = std::accumulate(b.selection_pct.begin(), b.selection_pct.end(), 0.0);
  CHECK(sel + b.none_pct == doctest::Approx(100.0));
  CHECK(std::accumulate(b.mean_patients.begin(), b.mean_patients.end(), 0.0) <= c.max_patients);
  // No acceptable dose: correct selection is none, every dose is an overdose.
  CHECK(b.mtd_selection_pct == b.none_pct);
  CHECK(b.overdose_selection_pct == doctest::Approx(sel));
  CHECK(b.overdose_allocation_pct == doctest::Approx(100.0));
}

TEST_CASE("overdose readings on a hand-made batch") {
  const Scenario s{{0.05, 0.1, 0.2, 0.3, 0.5}, 0.2, "t", 3};
  TrialResult a;
  a.selected_mtd = 4;
  a.patient_counts = {3, 3, 6, 6, 0};
  a.dlt_counts = {0, 0, 1, 2, 0};
  TrialResult b;
  b.selected_mtd = 3;
  b.patient_counts = {3, 3, 12, 0, 0};
  b.dlt_counts = {0, 0, 3, 0, 0};
  const BatchSummary sum = summarize(s, std::vector<TrialResult>{a, b});
  CHECK(sum.selection_pct == std::vector<double>{0, 0, 50, 50, 0});
  CHECK(sum.mtd_selection_pct == 50);
  CHECK(sum.overdose_selection_pct == 50);
  CHECK(sum.overdose_allocation_pct == doctest::Approx(100.0 * (6.0 / 18.0) / 2));
  CHECK(sum.mtd_allocation_pct == doctest::Approx(100.0 * (6.0 / 18 + 12.0 / 18) / 2));
  CHECK(sum.above_target_selection_pct == 50);
  CHECK(sum.dlt_pct == doctest::Approx(100.0 * 6 / 36));
  CHECK(sum.mean_trial_dlt_pct == doctest::Approx(100.0 * (3.0 / 18 + 3.0 / 18) / 2));
}

TEST_CASE("dimension and fingerprint mismatches are rejected") {
  const Scenario s = fixed_scenarios()[0];
  TrialConfig c = config_for(s);
  c.num_doses = 3;
  const PriorBank bank = generate_bank(c, 1);
  RandomStream rng(1);
  CHECK_THROWS_AS(run_trial(s, c, bank, rng), ConfigError);
  TrialConfig six = config_for(s);
  CHECK_THROWS_AS(run_trial(s, six, bank, rng), FingerprintMismatch);
}

TEST_CASE("sweep layout and common random numbers") {
  TrialConfig base;
  base.num_doses = 5;
  base.target = 0.3;
  base.samples_per_model = 500;
  base.max_patients = 18;
  ScenarioGenSpec spec;
  RandomStream rng(3);
  std::vector<Scenario> scenarios;
  for (int i = 0; i < 3; ++i) scenarios.push_back(generate_random_scenario(spec, rng));

  SweepGrid grid{{0.0, 0.05, 0.1, 0.15, 0.2, std::nullopt}, {0.1, 0.05, 0.01, 0.005}};
  SweepOptions opt;
  opt.replications = 2;
  opt.seed = 9;
  opt.mu_tag = 0.25;
  const auto rows = sweep(base, grid, scenarios, opt);
  REQUIRE(rows.size() == 24 * 3);
  for (std::size_t di = 0; di < 6; ++di) {
    for (std::size_t hi = 0; hi < 4; ++hi) {
      for (std::size_t si = 0; si < 3; ++si) {
        const auto& r = rows[(di * 4 + hi) * 3 + si];
        CHECK(r.scenario_index == si);
        CHECK(r.bandwidth == grid.bandwidths[hi]);
        CHECK(r.delta == grid.deltas[di]);
        CHECK(r.mu == 0.25);
        if (r.delta) {
          CHECK(r.delta_used == *r.delta);
        } else {
          CHECK(r.delta_used > 0.0);
          CHECK(r.delta_used < 0.2);
        }
      }
    }
  }

  // A single-cell sweep is the batch it wraps.
  SweepGrid cell{{0.1}, {0.01}};
  const auto one = sweep(base, cell, {scenarios[0]}, opt);
  REQUIRE(one.size() == 1);
  TrialConfig c = base;
  c.delta = 0.1;
  c.bandwidth = 0.01;
  const PriorBank bank = generate_bank(c, derive_seed(opt.seed, 1, 0));
  CHECK(one[0].summary == run_batch(scenarios[0], c, bank, 2, derive_seed(opt.seed, 2, 0)));

  CHECK_THROWS_AS(sweep(base, SweepGrid{{}, {0.01}}, scenarios, opt), std::invalid_argument);
}
