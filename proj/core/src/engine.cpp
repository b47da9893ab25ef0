#include "abc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "abc/errors.hpp"
#include "abc/special_functions.hpp"
#include "abc/weighted_median.hpp"

namespace abc {

std::string_view to_string(TrialStatus status) {
  switch (status) {
    case TrialStatus::Active: return "active";
    case TrialStatus::StoppedForSafety: return "stopped_for_safety";
    case TrialStatus::Completed: return "completed";
  }
  return "unknown";
}

std::string_view to_string(Decision::Action action) {
  switch (action) {
    case Decision::Action::Escalate: return "escalate";
    case Decision::Action::Stay: return "stay";
    case Decision::Action::Deescalate: return "deescalate";
    case Decision::Action::StopSafety: return "stop_safety";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// TrialState

TrialState TrialState::initial(const TrialConfig& config) {
  TrialState s;
  s.dlt_counts.assign(static_cast<std::size_t>(config.num_doses), 0);
  s.patient_counts.assign(static_cast<std::size_t>(config.num_doses), 0);
  s.current_dose = config.start_dose;
  return s;
}

int TrialState::total_patients() const {
  return std::accumulate(patient_counts.begin(), patient_counts.end(), 0);
}

int TrialState::total_dlts() const { return std::accumulate(dlt_counts.begin(), dlt_counts.end(), 0); }

int TrialState::next_cohort_size(const TrialConfig& config) const {
  return std::max(0, std::min(config.cohort_size, config.max_patients - total_patients()));
}

void TrialState::check(const TrialConfig& config) const {
  const auto k = static_cast<std::size_t>(config.num_doses);
  if (dlt_counts.size() != k || patient_counts.size() != k) {
    throw CountError("count vectors must have one entry per dose (K=" + std::to_string(k) + ")");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (patient_counts[i] < 0 || dlt_counts[i] < 0 || dlt_counts[i] > patient_counts[i]) {
      throw CountError("dose " + std::to_string(i + 1) + ": need 0 <= y <= m (y=" +
                       std::to_string(dlt_counts[i]) + ", m=" + std::to_string(patient_counts[i]) + ")");
    }
  }
  if (total_patients() > config.max_patients) {
    throw CountError("total patients exceed max_patients");
  }
  if (current_dose < 1 || current_dose > config.num_doses) {
    throw CountError("current dose must be in 1..K");
  }
}

void TrialState::record_cohort(int dose, int patients, int dlts, const TrialConfig& config) {
  if (status != TrialStatus::Active) throw TrialStateError("trial is not active");
  if (dose < 1 || dose > config.num_doses) throw CountError("dose must be in 1..K");
  if (patients < 1) throw CountError("a cohort needs at least one patient");
  if (dlts < 0 || dlts > patients) throw CountError("DLTs must satisfy 0 <= dlts <= patients");
  if (total_patients() + patients > config.max_patients) {
    throw CountError("cohort would exceed max_patients (" + std::to_string(config.max_patients) + ")");
  }
  const auto i = static_cast<std::size_t>(dose - 1);
  patient_counts[i] += patients;
  dlt_counts[i] += dlts;
  ++cohorts_enrolled;
}

// ---------------------------------------------------------------------------
// Stopping rules

double beta_exceedance(int y1, int m1, double target) {
  if (y1 < 0 || m1 < 0 || y1 > m1) throw CountError("need 0 <= y1 <= m1");
  return 1.0 - regularized_incomplete_beta(target, 0.5 + y1, 0.5 + (m1 - y1));
}

bool safety_stop(int y1, int m1, const TrialConfig& config) {
  if (y1 < 0 || m1 < 0 || y1 > m1) throw CountError("need 0 <= y1 <= m1");
  if (m1 < 3) return false;
  return beta_exceedance(y1, m1, config.target) > config.stop_threshold;
}

double Weights::sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }

bool alt_safety_stop(const PriorBank& bank, const Weights& weights, const TrialConfig& config) {
  if (weights.values.size() != bank.size()) {
    throw std::invalid_argument("weights are not aligned with the prior bank");
  }
  const auto p1 = bank.column_probs(0);
  double total = 0.0;
  double above = 0.0;
  for (std::size_t j = 0; j < p1.size(); ++j) {
    total += weights.values[j];
    if (p1[j] > config.target) above += weights.values[j];
  }
  if (!(total > 0.0)) throw DegenerateWeights("all weights are zero");
  return above / total > config.alt_stop_threshold.value_or(kDefaultAltStopThreshold);
}

// ---------------------------------------------------------------------------
// Weights and estimates

namespace {

// exp() underflows to subnormals below about -708.
constexpr double kLogUnderflow = -700.0;

}  // namespace

Weights compute_weights(const PriorBank& bank, const TrialState& state, const TrialConfig& config,
                        RandomStream& rng) {
  bank.check_matches(config);
  state.check(config);

  const std::size_t j_count = bank.size();
  std::vector<double> distance(j_count, 0.0);
  std::vector<double> term;

  for (int k = 0; k < config.num_doses; ++k) {
    const int m = state.patient_counts[static_cast<std::size_t>(k)];
    if (m == 0) continue;
    const int y = state.dlt_counts[static_cast<std::size_t>(k)];
    // Squared discrepancy for every possible simulated count.
    term.resize(static_cast<std::size_t>(m) + 1);
    for (int s = 0; s <= m; ++s) {
      const double diff = static_cast<double>(s) / m - static_cast<double>(y) / m;
      term[static_cast<std::size_t>(s)] = diff * diff;
    }
    const auto p = bank.column_probs(k);
    const auto lp = bank.log_p(k);
    const auto lq = bank.log_q(k);
    for (std::size_t j = 0; j < j_count; ++j) {
      distance[j] += term[static_cast<std::size_t>(rng.binomial(m, p[j], lp[j], lq[j]))];
    }
  }

  Weights w;
  w.values.resize(j_count);
  if (j_count == 0) return w;
  const auto [min_it, max_it] = std::minmax_element(distance.begin(), distance.end());
  const double inv_h = 1.0 / config.bandwidth;
  const double lowest_log = -*max_it * inv_h;
  if (lowest_log < kLogUnderflow) w.log_offset = -*min_it * inv_h;
  for (std::size_t j = 0; j < j_count; ++j) {
    w.values[j] = std::exp(-distance[j] * inv_h - w.log_offset);
  }
  return w;
}

int closest_dose(std::span<const double> p_hat, double target, std::span<const int> patient_counts,
                 bool restrict_to_tried) {
  const bool restrict =
      restrict_to_tried && patient_counts.size() == p_hat.size() &&
      std::any_of(patient_counts.begin(), patient_counts.end(), [](int m) { return m > 0; });
  int best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < p_hat.size(); ++k) {
    if (restrict && patient_counts[k] == 0) continue;
    const double gap = std::fabs(p_hat[k] - target);
    if (gap < best_gap) {  // strict: ties keep the lower dose
      best_gap = gap;
      best = static_cast<int>(k) + 1;
    }
  }
  return best;
}

Estimate estimate_toxicity(const PriorBank& bank, const Weights& weights, const TrialConfig& config,
                           std::span<const int> patient_counts) {
  if (weights.values.size() != bank.size()) {
    throw std::invalid_argument("weights are not aligned with the prior bank");
  }
  Estimate e;
  e.effective_weight_sum = weights.sum();
  if (!(e.effective_weight_sum > 0.0)) throw DegenerateWeights("all weights are zero");
  e.p_hat.resize(static_cast<std::size_t>(bank.num_doses()));
  for (int k = 0; k < bank.num_doses(); ++k) {
    e.p_hat[static_cast<std::size_t>(k)] = weighted_median_presorted(
        bank.sorted_values(k), bank.sorted_order(k), weights.values, e.effective_weight_sum);
  }
  e.optimal_dose = closest_dose(e.p_hat, config.target, patient_counts, config.restrict_to_tried);
  return e;
}

// ---------------------------------------------------------------------------
// Transitions

Decision next_decision(const TrialState& state, const Estimate& estimate, const TrialConfig& config) {
  if (state.status != TrialStatus::Active) throw TrialStateError("trial is not active");
  Decision d;
  d.estimate = estimate;
  if (safety_stop(state.dlt_counts.at(0), state.patient_counts.at(0), config)) {
    d.action = Decision::Action::StopSafety;
    d.next_dose = 0;
    return d;
  }
  const int current = state.current_dose;
  const int target = estimate.optimal_dose;
  if (current > target) {
    d.action = Decision::Action::Deescalate;
    d.next_dose = current - 1;
  } else if (current < target) {
    d.action = Decision::Action::Escalate;
    d.next_dose = current + 1;
  } else {
    d.action = Decision::Action::Stay;
    d.next_dose = current;
  }
  d.next_dose = std::clamp(d.next_dose, 1, config.num_doses);
  return d;
}

Decision recommend(const PriorBank& bank, const TrialState& state, const TrialConfig& config,
                   RandomStream& rng) {
  if (state.status != TrialStatus::Active) throw TrialStateError("trial is not active");
  const Weights w = compute_weights(bank, state, config, rng);
  Decision d = next_decision(state, estimate_toxicity(bank, w, config, state.patient_counts), config);
  if (d.action != Decision::Action::StopSafety && config.alt_stop_threshold &&
      alt_safety_stop(bank, w, config)) {
    d.action = Decision::Action::StopSafety;
    d.next_dose = 0;
  }
  return d;
}

void apply(TrialState& state, const Decision& decision) {
  if (state.status != TrialStatus::Active) throw TrialStateError("trial is not active");
  if (decision.action == Decision::Action::StopSafety) {
    state.status = TrialStatus::StoppedForSafety;
    return;
  }
  state.current_dose = decision.next_dose;
}

std::optional<int> select_final_mtd(const PriorBank& bank, const TrialState& state,
                                    const TrialConfig& config, RandomStream& rng) {
  switch (state.status) {
    case TrialStatus::StoppedForSafety:
      return std::nullopt;
    case TrialStatus::Active:
      throw TrialStateError("final MTD requested on an active trial");
    case TrialStatus::Completed:
      break;
  }
  const Weights w = compute_weights(bank, state, config, rng);
  return estimate_toxicity(bank, w, config, state.patient_counts).optimal_dose;
}

}  // namespace abc
