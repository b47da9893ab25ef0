#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abc/config.hpp"
#include "abc/engine.hpp"
#include "abc/prior_bank.hpp"
#include "abc/random.hpp"
#include "abc/scenario.hpp"

namespace abc {

struct CohortRecord {
  int dose = 0;
  int patients = 0;
  int dlts = 0;
  bool operator==(const CohortRecord&) const = default;
};

struct TrialResult {
  int selected_mtd = 0;  // 0 = none selected
  std::vector<int> patient_counts;
  std::vector<int> dlt_counts;
  bool stopped_early = false;
  std::vector<CohortRecord> trajectory;

  [[nodiscard]] int total_patients() const;
  [[nodiscard]] int total_dlts() const;
};

// Simulates one trial: cohorts are treated at the current dose with outcomes
// drawn from the scenario, the safety rule is checked after every cohort, the
// engine picks the next dose, and the final MTD comes from one more round of
// simulation once max_patients is reached.
TrialResult run_trial(const Scenario& scenario, const TrialConfig& config, const PriorBank& bank,
                      RandomStream& rng);

// Feeds a fixed sequence of cohort outcomes through the same bookkeeping and
// finishes with the final selection (or a safety stop if the rule fires).
// The recorded doses are used as given.
TrialResult replay_trial(std::span<const CohortRecord> cohorts, const TrialConfig& config,
                         const PriorBank& bank, RandomStream& rng);

struct BatchSummary {
  std::string scenario;
  std::vector<double> true_probs;
  int mtd_index = 0;
  int replications = 0;
  std::vector<double> selection_pct;  // per dose
  std::vector<double> mean_patients;  // per dose
  double none_pct = 0.0;
  // Total DLTs over total patients across all trials. Early-stopped trials
  // are short, so this differs from the mean of per-trial rates when many
  // trials stop.
  double dlt_pct = 0.0;
  double mean_trial_dlt_pct = 0.0;  // mean over trials of DLTs / patients
  double mtd_selection_pct = 0.0;  // none_pct when no dose is acceptable
  double mtd_allocation_pct = 0.0;
  // Overdose = any dose above the true MTD (every dose when there is none).
  double overdose_selection_pct = 0.0;
  double overdose_allocation_pct = 0.0;
  // Alternative reading: any dose whose true probability exceeds the target.
  double above_target_selection_pct = 0.0;
  double above_target_allocation_pct = 0.0;

  bool operator==(const BatchSummary&) const = default;
};

BatchSummary summarize(const Scenario& scenario, std::span<const TrialResult> trials);

// Replication r uses the stream derive_seed(master_seed, r); results are
// reduced in replication order, so the summary is independent of `workers`.
BatchSummary run_batch(const Scenario& scenario, const TrialConfig& config, const PriorBank& bank,
                       int replications, std::uint64_t master_seed, int workers = 1,
                       std::vector<TrialResult>* trials_out = nullptr);

// ---------------------------------------------------------------------------
// (delta, h) sweep

inline constexpr double kRandomDeltaUpper = 0.2;

struct SweepGrid {
  // nullopt stands for a delta drawn from Uniform(0, 0.2) per scenario.
  std::vector<std::optional<double>> deltas;
  std::vector<double> bandwidths;

  [[nodiscard]] std::size_t cells() const { return deltas.size() * bandwidths.size(); }
};

struct SweepRow {
  std::optional<double> delta;  // nullopt for the random-delta column
  double delta_used = 0.0;
  double bandwidth = 0.0;
  std::size_t scenario_index = 0;
  std::optional<double> mu;  // tag for random-scenario sweeps
  BatchSummary summary;
};

struct SweepOptions {
  int replications = 1;
  std::uint64_t seed = 1;
  int workers = 1;
  std::optional<double> mu_tag;
};

// One row per (delta, h, scenario), ordered delta-major then h then scenario.
// Banks are generated once per delta and shared across h; the random-delta
// column draws and builds a bank per scenario. Replication streams depend
// only on the scenario index, so every cell sees the same simulated patients.
std::vector<SweepRow> sweep(const TrialConfig& base, const SweepGrid& grid,
                            const std::vector<Scenario>& scenarios, const SweepOptions& options);

}  // namespace abc
