#include "abc/trial_sim.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "abc/errors.hpp"
#include "abc/parallel.hpp"

namespace abc {

int TrialResult::total_patients() const {
  return std::accumulate(patient_counts.begin(), patient_counts.end(), 0);
}

int TrialResult::total_dlts() const { return std::accumulate(dlt_counts.begin(), dlt_counts.end(), 0); }

namespace {

TrialResult finish(TrialState& state, std::vector<CohortRecord> trajectory, const TrialConfig& config,
                   const PriorBank& bank, RandomStream& rng) {
  TrialResult r;
  r.selected_mtd = select_final_mtd(bank, state, config, rng).value_or(0);
  r.stopped_early = state.status == TrialStatus::StoppedForSafety;
  r.patient_counts = std::move(state.patient_counts);
  r.dlt_counts = std::move(state.dlt_counts);
  r.trajectory = std::move(trajectory);
  return r;
}

}  // namespace

TrialResult run_trial(const Scenario& scenario, const TrialConfig& config, const PriorBank& bank,
                      RandomStream& rng) {
  if (scenario.num_doses() != config.num_doses) {
    throw ConfigError("scenario has " + std::to_string(scenario.num_doses()) + " doses but config K=" +
                      std::to_string(config.num_doses));
  }
  bank.check_matches(config);

  TrialState state = TrialState::initial(config);
  std::vector<CohortRecord> trajectory;
  while (state.status == TrialStatus::Active) {
    const int n = state.next_cohort_size(config);
    const int dose = state.current_dose;
    const int dlts = rng.binomial(n, scenario.true_probs[static_cast<std::size_t>(dose - 1)]);
    state.record_cohort(dose, n, dlts, config);
    trajectory.push_back({dose, n, dlts});

    if (safety_stop(state.dlt_counts[0], state.patient_counts[0], config)) {
      state.status = TrialStatus::StoppedForSafety;
    } else if (state.total_patients() >= config.max_patients) {
      state.status = TrialStatus::Completed;
    } else {
      apply(state, recommend(bank, state, config, rng));
    }
  }
  return finish(state, std::move(trajectory), config, bank, rng);
}

TrialResult replay_trial(std::span<const CohortRecord> cohorts, const TrialConfig& config,
                         const PriorBank& bank, RandomStream& rng) {
  bank.check_matches(config);
  TrialState state = TrialState::initial(config);
  std::vector<CohortRecord> trajectory;
  for (const auto& c : cohorts) {
    state.record_cohort(c.dose, c.patients, c.dlts, config);
    state.current_dose = c.dose;
    trajectory.push_back(c);
    if (safety_stop(state.dlt_counts[0], state.patient_counts[0], config)) {
      state.status = TrialStatus::StoppedForSafety;
      break;
    }
  }
  if (state.status == TrialStatus::Active) state.status = TrialStatus::Completed;
  return finish(state, std::move(trajectory), config, bank, rng);
}

BatchSummary summarize(const Scenario& scenario, std::span<const TrialResult> trials) {
  const auto k_count = static_cast<std::size_t>(scenario.num_doses());
  BatchSummary s;
  s.scenario = scenario.label;
  s.true_probs = scenario.true_probs;
  s.mtd_index = scenario.mtd_index;
  s.replications = static_cast<int>(trials.size());
  s.selection_pct.assign(k_count, 0.0);
  s.mean_patients.assign(k_count, 0.0);
  if (trials.empty()) return s;

  // Doses (0-based) counted as overdoses under each reading.
  const auto first_over = static_cast<std::size_t>(scenario.mtd_index);
  std::vector<bool> above_target(k_count);
  for (std::size_t k = 0; k < k_count; ++k) above_target[k] = scenario.true_probs[k] > scenario.target;

  double none = 0.0;
  double dlt = 0.0;
  double pooled_dlts = 0.0;
  double pooled_patients = 0.0;
  double mtd_alloc = 0.0;
  double over_sel = 0.0;
  double over_alloc = 0.0;
  double above_sel = 0.0;
  double above_alloc = 0.0;
  for (const auto& t : trials) {
    if (t.patient_counts.size() != k_count) throw std::invalid_argument("trial/scenario dose mismatch");
    const double total = t.total_patients();
    pooled_dlts += t.total_dlts();
    pooled_patients += total;
    if (t.selected_mtd == 0) {
      none += 1.0;
    } else {
      const auto sel = static_cast<std::size_t>(t.selected_mtd - 1);
      s.selection_pct[sel] += 1.0;
      if (sel >= first_over) over_sel += 1.0;
      if (above_target[sel]) above_sel += 1.0;
    }
    double over_n = 0.0;
    double above_n = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      const double m = t.patient_counts[k];
      s.mean_patients[k] += m;
      if (k >= first_over) over_n += m;
      if (above_target[k]) above_n += m;
    }
    if (total > 0) {
      dlt += t.total_dlts() / total;
      over_alloc += over_n / total;
      above_alloc += above_n / total;
      if (scenario.mtd_index >= 1) {
        mtd_alloc += t.patient_counts[static_cast<std::size_t>(scenario.mtd_index - 1)] / total;
      }
    }
  }

  const double n = static_cast<double>(trials.size());
  for (auto& v : s.selection_pct) v = 100.0 * v / n;
  for (auto& v : s.mean_patients) v /= n;
  s.none_pct = 100.0 * none / n;
  s.dlt_pct = pooled_patients > 0 ? 100.0 * pooled_dlts / pooled_patients : 0.0;
  s.mean_trial_dlt_pct = 100.0 * dlt / n;
  s.mtd_selection_pct =
      scenario.mtd_index >= 1 ? s.selection_pct[static_cast<std::size_t>(scenario.mtd_index - 1)] : s.none_pct;
  s.mtd_allocation_pct = 100.0 * mtd_alloc / n;
  s.overdose_selection_pct = 100.0 * over_sel / n;
  s.overdose_allocation_pct = 100.0 * over_alloc / n;
  s.above_target_selection_pct = 100.0 * above_sel / n;
  s.above_target_allocation_pct = 100.0 * above_alloc / n;
  return s;
}

BatchSummary run_batch(const Scenario& scenario, const TrialConfig& config, const PriorBank& bank,
                       int replications, std::uint64_t master_seed, int workers,
                       std::vector<TrialResult>* trials_out) {
  if (replications < 1) throw std::invalid_argument("replications must be >= 1");
  validate(config);
  std::vector<TrialResult> trials(static_cast<std::size_t>(replications));
  parallel_for(trials.size(), workers, [&](std::size_t r) {
    RandomStream rng(derive_seed(master_seed, r));
    trials[r] = run_trial(scenario, config, bank, rng);
  });
  BatchSummary s = summarize(scenario, trials);
  if (trials_out) *trials_out = std::move(trials);
  return s;
}

// ---------------------------------------------------------------------------

namespace {

enum : std::uint64_t { kBankStream = 1, kBatchStream = 2, kRandomDeltaStream = 3 };

}  // namespace

std::vector<SweepRow> sweep(const TrialConfig& base, const SweepGrid& grid,
                            const std::vector<Scenario>& scenarios, const SweepOptions& opt) {
  if (grid.deltas.empty() || grid.bandwidths.empty()) throw std::invalid_argument("sweep grid is empty");
  if (scenarios.empty()) throw std::invalid_argument("sweep needs at least one scenario");
  if (opt.replications < 1) throw std::invalid_argument("replications must be >= 1");

  const std::size_t n_scen = scenarios.size();
  const std::size_t n_h = grid.bandwidths.size();
  std::vector<SweepRow> rows(grid.cells() * n_scen);

  for (std::size_t di = 0; di < grid.deltas.size(); ++di) {
    const auto& delta = grid.deltas[di];

    // Fixed delta: one bank shared by every scenario and bandwidth.
    std::optional<PriorBank> shared_bank;
    if (delta) {
      TrialConfig cfg = base;
      cfg.delta = *delta;
      shared_bank.emplace(generate_bank(cfg, derive_seed(opt.seed, kBankStream, di), opt.workers));
    }

    parallel_for(n_scen, shared_bank ? opt.workers : 1, [&](std::size_t si) {
      const Scenario& scen = scenarios[si];
      TrialConfig cfg = base;
      std::optional<PriorBank> own_bank;
      if (delta) {
        cfg.delta = *delta;
      } else {
        RandomStream pick(derive_seed(opt.seed, kRandomDeltaStream, si));
        cfg.delta = pick.uniform_open(0.0, std::min(kRandomDeltaUpper, cfg.target));
        own_bank.emplace(generate_bank(cfg, derive_seed(derive_seed(opt.seed, kBankStream, di), si), opt.workers));
      }
      const PriorBank& bank = delta ? *shared_bank : *own_bank;
      for (std::size_t hi = 0; hi < n_h; ++hi) {
        cfg.bandwidth = grid.bandwidths[hi];
        SweepRow row;
        row.delta = delta;
        row.delta_used = cfg.delta;
        row.bandwidth = cfg.bandwidth;
        row.scenario_index = si;
        row.mu = opt.mu_tag;
        row.summary = run_batch(scen, cfg, bank, opt.replications, derive_seed(opt.seed, kBatchStream, si),
                                delta ? 1 : opt.workers);
        rows[(di * n_h + hi) * n_scen + si] = std::move(row);
      }
    });
  }
  return rows;
}

}  // namespace abc
