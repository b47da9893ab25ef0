#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "abc/config.hpp"
#include "abc/prior_bank.hpp"
#include "abc/random.hpp"

namespace abc {

enum class TrialStatus { Active, StoppedForSafety, Completed };

std::string_view to_string(TrialStatus status);

// Cumulative trial data: y_k DLTs among m_k patients at each dose.
struct TrialState {
  std::vector<int> dlt_counts;
  std::vector<int> patient_counts;
  int current_dose = 1;
  int cohorts_enrolled = 0;
  TrialStatus status = TrialStatus::Active;

  static TrialState initial(const TrialConfig& config);

  [[nodiscard]] int total_patients() const;
  [[nodiscard]] int total_dlts() const;

  // Patients in the next cohort: cohort_size, truncated so the trial ends
  // exactly at max_patients. Zero once the trial is full.
  [[nodiscard]] int next_cohort_size(const TrialConfig& config) const;

  // Adds a cohort outcome at `dose` (1-based). Throws CountError on
  // dlts > patients, an out-of-range dose, or overfilling the trial, and
  // TrialStateError unless the trial is Active. Does not move current_dose.
  void record_cohort(int dose, int patients, int dlts, const TrialConfig& config);

  // Throws CountError unless 0 <= y_k <= m_k, dimensions match K and
  // sum m_k <= max_patients.
  void check(const TrialConfig& config) const;

  bool operator==(const TrialState&) const = default;
};

// Kernel weights w_j for the bank samples. The true weight of sample j is
// values[j] * exp(log_offset); log_offset is nonzero only when the raw
// weights would underflow, in which case the largest weight is scaled to 1.
struct Weights {
  std::vector<double> values;
  double log_offset = 0.0;

  [[nodiscard]] double sum() const;
};

struct Estimate {
  std::vector<double> p_hat;
  double effective_weight_sum = 0.0;
  int optimal_dose = 1;
};

struct Decision {
  enum class Action { Escalate, Stay, Deescalate, StopSafety };
  Action action = Action::Stay;
  int next_dose = 0;  // 0 for StopSafety
  Estimate estimate;
};

std::string_view to_string(Decision::Action action);

// Posterior Pr(p_1 > phi) under a Beta(0.5, 0.5) prior.
double beta_exceedance(int y1, int m1, double target);

// True iff m1 >= 3 and Pr(p_1 > phi | y1, m1) > stop_threshold.
bool safety_stop(int y1, int m1, const TrialConfig& config);

// Weighted-bank stopping rule: weighted fraction of samples with p_1 > phi
// exceeds alt_stop_threshold (0.9 when unset). Throws DegenerateWeights if
// the weights sum to zero.
bool alt_safety_stop(const PriorBank& bank, const Weights& weights, const TrialConfig& config);

// One fresh round of simulated datasets against the observed counts:
// y_k^(j) ~ Binomial(m_k, p_k^(j)) at every tried dose and
// w_j = exp(-sum_k (y_k^(j)/m_k - y_k/m_k)^2 / h). Untried doses contribute 0.
Weights compute_weights(const PriorBank& bank, const TrialState& state, const TrialConfig& config,
                        RandomStream& rng);

// argmin_k |p_hat_k - phi| (1-based), lower dose on ties. With
// restrict_to_tried the argmin ranges over doses with patients, falling
// back to all doses when none has been tried.
int closest_dose(std::span<const double> p_hat, double target, std::span<const int> patient_counts,
                 bool restrict_to_tried);

// Weighted medians of each bank column and the resulting optimal dose.
// `patient_counts` is only consulted when config.restrict_to_tried is set.
Estimate estimate_toxicity(const PriorBank& bank, const Weights& weights, const TrialConfig& config,
                           std::span<const int> patient_counts = {});

// Single-step dose transition toward the estimate's optimal dose, or
// StopSafety when the Beta(0.5, 0.5) rule fires. Throws TrialStateError on a
// trial that is not Active.
Decision next_decision(const TrialState& state, const Estimate& estimate, const TrialConfig& config);

// Full recommendation for the next cohort from the current data: weights,
// estimate, both stopping rules (the weighted-bank rule only when
// alt_stop_threshold is set) and the transition.
Decision recommend(const PriorBank& bank, const TrialState& state, const TrialConfig& config,
                   RandomStream& rng);

// Applies a decision: moves current_dose or marks the trial stopped.
void apply(TrialState& state, const Decision& decision);

// Final MTD from a fresh round of simulation on the final data; nullopt for a
// trial stopped for safety. Throws TrialStateError on an Active trial.
std::optional<int> select_final_mtd(const PriorBank& bank, const TrialState& state,
                                    const TrialConfig& config, RandomStream& rng);

}  // namespace abc
