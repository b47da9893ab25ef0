#pragma once

// Live trial conduct: an event-sourced record per trial, persisted as one
// append-only JSON-lines log under a data directory.
//
// Every derived quantity (counts, estimates, decisions, final MTD) is a pure
// function of the trial's config, bank, seed and cohort log. The decision
// after cohort event i uses the stream derive_seed(trial_seed, i), so a past
// recommendation can be reproduced with `next-dose --seed <decision_seed>`.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "abc/config.hpp"
#include "abc/engine.hpp"
#include "abc/prior_bank.hpp"

namespace abc {

class TrialNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The request is well formed but the trial's status forbids it.
class TrialConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CohortEvent {
  int index = 0;  // 1-based position in the log
  std::string timestamp;
  int dose = 0;
  int patients = 0;
  int dlts = 0;
  bool override_dose = false;
};

struct EventOutcome {
  CohortEvent event;
  std::uint64_t decision_seed = 0;
  Decision decision;  // next-dose decision, or the final estimate on completion
  TrialStatus status_after = TrialStatus::Active;
};

struct TrialRecord {
  std::string id;
  std::string created_at;
  TrialConfig config;
  BankFingerprint bank;
  std::uint64_t seed = 0;

  // Derived by replay.
  TrialState state;
  Estimate estimate;         // latest estimate (prior-only before any cohort)
  int recommended_dose = 0;  // 0 once the trial is no longer Active
  std::optional<int> final_mtd;
  std::vector<EventOutcome> history;
};

// Rebuilds the derived part of `record` from scratch by replaying `events`.
// Throws CountError if an event is inconsistent with the state at that point.
void replay(TrialRecord& record, const PriorBank& bank, const std::vector<CohortEvent>& events);

// JSON view served to clients: config, per-dose counts and estimates
// (p_hat and |p_hat - phi|), recommendation, status and history.
nlohmann::json trial_view(const TrialRecord& record);
nlohmann::json trial_summary(const TrialRecord& record);

// In-memory and on-disk cache of prior banks keyed by fingerprint.
class BankCache {
 public:
  explicit BankCache(std::filesystem::path dir, int workers = 1);
  std::shared_ptr<const PriorBank> get(const TrialConfig& config, std::uint64_t bank_seed);

 private:
  std::filesystem::path dir_;
  int workers_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const PriorBank>> banks_;
};

struct CohortRequest {
  int dose = 0;
  int patients = 0;
  int dlts = 0;
  bool override_dose = false;
};

// Thread-safe registry of live trials. Mutations on one trial are serialized;
// reads of a trial share its lock. Every mutation is fsynced to the trial's
// log before the call returns.
class TrialStore {
 public:
  // Seed used for every service-generated bank, so banks are shared across
  // trials with the same design constants.
  static constexpr std::uint64_t kBankSeed = 20000;

  explicit TrialStore(std::filesystem::path data_dir, int workers = 1);

  // Loads and replays every log under data_dir/trials. Logs that fail to
  // parse are skipped and reported in the returned list.
  std::vector<std::string> recover();

  TrialRecord create(const TrialConfig& config, std::optional<std::uint64_t> seed = std::nullopt);
  TrialRecord post_cohort(const std::string& id, const CohortRequest& cohort);
  TrialRecord get(const std::string& id) const;
  std::vector<TrialRecord> list() const;
  void remove(const std::string& id);

  [[nodiscard]] const std::filesystem::path& data_dir() const { return data_dir_; }

 private:
  struct Entry {
    mutable std::shared_mutex mutex;
    TrialRecord record;
    std::vector<CohortEvent> events;
    std::shared_ptr<const PriorBank> bank;
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  [[nodiscard]] std::filesystem::path log_path(const std::string& id) const;

  std::filesystem::path data_dir_;
  BankCache banks_;
  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> trials_;
};

}  // namespace abc
