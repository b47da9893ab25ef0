#include "abc/json_io.hpp"

#include <set>
#include <string>

#include "abc/errors.hpp"

namespace abc {

using nlohmann::json;

namespace {

const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys = {
      "num_doses",    "target",       "delta",          "bandwidth",          "samples_per_model",
      "cohort_size",  "max_patients", "start_dose",     "stop_threshold",     "alt_stop_threshold",
      "restrict_to_tried"};
  return keys;
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
  }
}

}  // namespace

TrialConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!config_keys().contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  TrialConfig c;
  read_if(j, "num_doses", c.num_doses);
  read_if(j, "target", c.target);
  read_if(j, "delta", c.delta);
  read_if(j, "bandwidth", c.bandwidth);
  read_if(j, "samples_per_model", c.samples_per_model);
  read_if(j, "cohort_size", c.cohort_size);
  read_if(j, "max_patients", c.max_patients);
  read_if(j, "start_dose", c.start_dose);
  read_if(j, "stop_threshold", c.stop_threshold);
  if (auto it = j.find("alt_stop_threshold"); it != j.end() && !it->is_null()) {
    double t = 0.0;
    read_if(j, "alt_stop_threshold", t);
    c.alt_stop_threshold = t;
  }
  read_if(j, "restrict_to_tried", c.restrict_to_tried);
  validate(c);
  return c;
}

json to_json_value(const TrialConfig& c) {
  json j;
  to_json(j, c);
  return j;
}

void to_json(json& j, const TrialConfig& c) {
  j = json{{"num_doses", c.num_doses},
           {"target", c.target},
           {"delta", c.delta},
           {"bandwidth", c.bandwidth},
           {"samples_per_model", c.samples_per_model},
           {"cohort_size", c.cohort_size},
           {"max_patients", c.max_patients},
           {"start_dose", c.start_dose},
           {"stop_threshold", c.stop_threshold},
           {"alt_stop_threshold", c.alt_stop_threshold ? json(*c.alt_stop_threshold) : json(nullptr)},
           {"restrict_to_tried", c.restrict_to_tried}};
}

void from_json(const json& j, TrialConfig& c) { c = config_from_json(j); }

void to_json(json& j, const BankFingerprint& f) {
  j = json{{"num_doses", f.num_doses},
           {"target", f.target},
           {"delta", f.delta},
           {"samples_per_model", f.samples_per_model},
           {"seed", f.seed}};
}

void from_json(const json& j, BankFingerprint& f) {
  j.at("num_doses").get_to(f.num_doses);
  j.at("target").get_to(f.target);
  j.at("delta").get_to(f.delta);
  j.at("samples_per_model").get_to(f.samples_per_model);
  j.at("seed").get_to(f.seed);
}

TrialStatus status_from_string(std::string_view s) {
  for (auto st : {TrialStatus::Active, TrialStatus::StoppedForSafety, TrialStatus::Completed}) {
    if (to_string(st) == s) return st;
  }
  throw std::invalid_argument("unknown trial status '" + std::string(s) + "'");
}

Decision::Action action_from_string(std::string_view s) {
  using A = Decision::Action;
  for (auto a : {A::Escalate, A::Stay, A::Deescalate, A::StopSafety}) {
    if (to_string(a) == s) return a;
  }
  throw std::invalid_argument("unknown decision '" + std::string(s) + "'");
}

void to_json(json& j, const TrialState& s) {
  j = json{{"dlt_counts", s.dlt_counts},
           {"patient_counts", s.patient_counts},
           {"current_dose", s.current_dose},
           {"cohorts_enrolled", s.cohorts_enrolled},
           {"status", to_string(s.status)}};
}

void from_json(const json& j, TrialState& s) {
  j.at("dlt_counts").get_to(s.dlt_counts);
  j.at("patient_counts").get_to(s.patient_counts);
  j.at("current_dose").get_to(s.current_dose);
  j.at("cohorts_enrolled").get_to(s.cohorts_enrolled);
  s.status = status_from_string(j.at("status").get<std::string>());
}

void to_json(json& j, const Estimate& e) {
  j = json{{"p_hat", e.p_hat}, {"effective_weight_sum", e.effective_weight_sum}, {"optimal_dose", e.optimal_dose}};
}

void from_json(const json& j, Estimate& e) {
  j.at("p_hat").get_to(e.p_hat);
  j.at("effective_weight_sum").get_to(e.effective_weight_sum);
  j.at("optimal_dose").get_to(e.optimal_dose);
}

void to_json(json& j, const Decision& d) {
  j = json{{"action", to_string(d.action)}, {"next_dose", d.next_dose}, {"estimate", d.estimate}};
}

void from_json(const json& j, Decision& d) {
  d.action = action_from_string(j.at("action").get<std::string>());
  j.at("next_dose").get_to(d.next_dose);
  j.at("estimate").get_to(d.estimate);
}

void to_json(json& j, const Scenario& s) {
  j = json{{"label", s.label}, {"target", s.target}, {"true_probs", s.true_probs}, {"mtd_index", s.mtd_index}};
}

void from_json(const json& j, Scenario& s) {
  j.at("label").get_to(s.label);
  j.at("target").get_to(s.target);
  j.at("true_probs").get_to(s.true_probs);
  j.at("mtd_index").get_to(s.mtd_index);
}

void to_json(json& j, const CohortRecord& c) {
  j = json{{"dose", c.dose}, {"patients", c.patients}, {"dlts", c.dlts}};
}

void from_json(const json& j, CohortRecord& c) {
  j.at("dose").get_to(c.dose);
  j.at("patients").get_to(c.patients);
  j.at("dlts").get_to(c.dlts);
}

void to_json(json& j, const BatchSummary& s) {
  j = json{{"scenario", s.scenario},
           {"true_probs", s.true_probs},
           {"mtd_index", s.mtd_index},
           {"replications", s.replications},
           {"selection_pct", s.selection_pct},
           {"mean_patients", s.mean_patients},
           {"none_pct", s.none_pct},
           {"dlt_pct", s.dlt_pct},
           {"mean_trial_dlt_pct", s.mean_trial_dlt_pct},
           {"mtd_selection_pct", s.mtd_selection_pct},
           {"mtd_allocation_pct", s.mtd_allocation_pct},
           {"overdose_selection_pct", s.overdose_selection_pct},
           {"overdose_allocation_pct", s.overdose_allocation_pct},
           {"above_target_selection_pct", s.above_target_selection_pct},
           {"above_target_allocation_pct", s.above_target_allocation_pct}};
}

void from_json(const json& j, BatchSummary& s) {
  j.at("scenario").get_to(s.scenario);
  j.at("true_probs").get_to(s.true_probs);
  j.at("mtd_index").get_to(s.mtd_index);
  j.at("replications").get_to(s.replications);
  j.at("selection_pct").get_to(s.selection_pct);
  j.at("mean_patients").get_to(s.mean_patients);
  j.at("none_pct").get_to(s.none_pct);
  j.at("dlt_pct").get_to(s.dlt_pct);
  j.at("mean_trial_dlt_pct").get_to(s.mean_trial_dlt_pct);
  j.at("mtd_selection_pct").get_to(s.mtd_selection_pct);
  j.at("mtd_allocation_pct").get_to(s.mtd_allocation_pct);
  j.at("overdose_selection_pct").get_to(s.overdose_selection_pct);
  j.at("overdose_allocation_pct").get_to(s.overdose_allocation_pct);
  j.at("above_target_selection_pct").get_to(s.above_target_selection_pct);
  j.at("above_target_allocation_pct").get_to(s.above_target_allocation_pct);
}

}  // namespace abc
