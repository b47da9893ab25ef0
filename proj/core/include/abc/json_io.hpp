#pragma once

// nlohmann::json conversions for the public domain types. Doubles are written
// with round-trip precision, so parse(emit(x)) == x.

#include <nlohmann/json.hpp>

#include "abc/config.hpp"
#include "abc/engine.hpp"
#include "abc/prior_bank.hpp"
#include "abc/scenario.hpp"
#include "abc/trial_sim.hpp"

namespace abc {

// Missing keys keep their TrialConfig defaults; unknown keys are rejected
// with ConfigError. The result is validated.
TrialConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json_value(const TrialConfig& c);

void to_json(nlohmann::json& j, const TrialConfig& c);
void from_json(const nlohmann::json& j, TrialConfig& c);

void to_json(nlohmann::json& j, const BankFingerprint& f);
void from_json(const nlohmann::json& j, BankFingerprint& f);

void to_json(nlohmann::json& j, const TrialState& s);
void from_json(const nlohmann::json& j, TrialState& s);

void to_json(nlohmann::json& j, const Estimate& e);
void from_json(const nlohmann::json& j, Estimate& e);

void to_json(nlohmann::json& j, const Decision& d);
void from_json(const nlohmann::json& j, Decision& d);

void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

void to_json(nlohmann::json& j, const CohortRecord& c);
void from_json(const nlohmann::json& j, CohortRecord& c);

void to_json(nlohmann::json& j, const BatchSummary& s);
void from_json(const nlohmann::json& j, BatchSummary& s);

TrialStatus status_from_string(std::string_view s);
Decision::Action action_from_string(std::string_view s);

}  // namespace abc
