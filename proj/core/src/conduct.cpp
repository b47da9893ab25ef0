#include "abc/conduct.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <random>
#include <system_error>

#include "abc/errors.hpp"
#include "abc/json_io.hpp"

namespace abc {

using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t entropy64() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string new_trial_id() {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id;
  for (int half = 0; half < 2; ++half) {
    std::uint64_t v = entropy64();
    for (int i = 0; i < 16; ++i, v >>= 4) id += kHex[v & 0xF];
  }
  return id;
}

bool valid_trial_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

std::string shortest(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void throw_errno(const std::string& what) { throw std::system_error(errno, std::generic_category(), what); }

// Appends one line and fsyncs before returning.
void append_durable(const std::filesystem::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw_errno("open " + path.string());
  const std::string data = line + "\n";
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int saved = errno;
      ::close(fd);
      errno = saved;
      throw_errno("write " + path.string());
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    const int saved = errno;
    ::close(fd);
    errno = saved;
    throw_errno("fsync " + path.string());
  }
  ::close(fd);
}

void fsync_dir(const std::filesystem::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

json event_json(const CohortEvent& e) {
  return json{{"type", "cohort"},       {"index", e.index},   {"timestamp", e.timestamp},
              {"dose", e.dose},         {"patients", e.patients}, {"dlts", e.dlts},
              {"override", e.override_dose}};
}

CohortEvent event_from_json(const json& j) {
  CohortEvent e;
  j.at("index").get_to(e.index);
  j.at("timestamp").get_to(e.timestamp);
  j.at("dose").get_to(e.dose);
  j.at("patients").get_to(e.patients);
  j.at("dlts").get_to(e.dlts);
  e.override_dose = j.value("override", false);
  return e;
}

}  // namespace

// ---------------------------------------------------------------------------

void replay(TrialRecord& record, const PriorBank& bank, const std::vector<CohortEvent>& events) {
  const TrialConfig& cfg = record.config;
  TrialState state = TrialState::initial(cfg);
  std::vector<EventOutcome> history;
  std::optional<int> final_mtd;

  // No cohort yet: every weight is 1, so this is the prior-only estimate.
  RandomStream prior_rng(derive_seed(record.seed, 0));
  Estimate estimate = estimate_toxicity(bank, compute_weights(bank, state, cfg, prior_rng), cfg,
                                        state.patient_counts);

  for (std::size_t i = 0; i < events.size(); ++i) {
    const CohortEvent& ev = events[i];
    if (ev.index != static_cast<int>(i) + 1) throw CountError("cohort events are out of order");
    if (state.status != TrialStatus::Active) {
      throw TrialConflict("trial is " + std::string(to_string(state.status)) + "; no further cohorts accepted");
    }
    if (!ev.override_dose && ev.dose != state.current_dose) {
      throw CountError("dose " + std::to_string(ev.dose) + " differs from the recommended dose " +
                       std::to_string(state.current_dose) + " (set override to enter it anyway)");
    }
    state.record_cohort(ev.dose, ev.patients, ev.dlts, cfg);
    state.current_dose = ev.dose;

    EventOutcome out;
    out.event = ev;
    out.decision_seed = derive_seed(record.seed, static_cast<std::uint64_t>(ev.index));
    RandomStream rng(out.decision_seed);

    const bool full = state.total_patients() >= cfg.max_patients;
    if (!full || safety_stop(state.dlt_counts[0], state.patient_counts[0], cfg)) {
      out.decision = recommend(bank, state, cfg, rng);
      apply(state, out.decision);
    } else {
      state.status = TrialStatus::Completed;
      const Weights w = compute_weights(bank, state, cfg, rng);
      out.decision.estimate = estimate_toxicity(bank, w, cfg, state.patient_counts);
      out.decision.action = Decision::Action::Stay;
      out.decision.next_dose = 0;
      final_mtd = out.decision.estimate.optimal_dose;
    }
    estimate = out.decision.estimate;
    out.status_after = state.status;
    history.push_back(std::move(out));
  }

  record.state = std::move(state);
  record.estimate = std::move(estimate);
  record.history = std::move(history);
  record.final_mtd = final_mtd;
  record.recommended_dose = record.state.status == TrialStatus::Active ? record.state.current_dose : 0;
}

json trial_summary(const TrialRecord& r) {
  json j{{"id", r.id},
         {"created_at", r.created_at},
         {"status", to_string(r.state.status)},
         {"num_doses", r.config.num_doses},
         {"target", r.config.target},
         {"patients", r.state.total_patients()},
         {"max_patients", r.config.max_patients},
         {"cohorts", r.history.size()},
         {"recommended_dose", r.recommended_dose ? json(r.recommended_dose) : json(nullptr)},
         {"final_mtd", r.final_mtd ? json(*r.final_mtd) : json(nullptr)}};
  return j;
}

json trial_view(const TrialRecord& r) {
  json j = trial_summary(r);
  j["config"] = r.config;
  j["bank"] = r.bank;
  // Seeds are strings so clients with 53-bit numbers keep every digit.
  j["seed"] = std::to_string(r.seed);
  j["state"] = r.state;

  json doses = json::array();
  for (int k = 0; k < r.config.num_doses; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double p = r.estimate.p_hat[i];
    doses.push_back({{"dose", k + 1},
                     {"patients", r.state.patient_counts[i]},
                     {"dlts", r.state.dlt_counts[i]},
                     {"p_hat", p},
                     {"distance", std::fabs(p - r.config.target)}});
  }
  j["doses"] = std::move(doses);
  j["estimate"] = r.estimate;

  const bool stopped = r.state.status == TrialStatus::StoppedForSafety;
  json rec;
  if (r.state.status == TrialStatus::Active) {
    if (r.history.empty()) {
      rec = {{"action", "start"}, {"dose", r.recommended_dose}};
    } else {
      rec = {{"action", to_string(r.history.back().decision.action)}, {"dose", r.recommended_dose}};
    }
  } else if (stopped) {
    rec = {{"action", to_string(Decision::Action::StopSafety)}, {"dose", nullptr}};
  } else {
    rec = {{"action", "complete"}, {"dose", nullptr}};
  }
  j["recommendation"] = std::move(rec);

  json history = json::array();
  for (const auto& h : r.history) {
    json e = event_json(h.event);
    e.erase("type");
    e["decision_seed"] = std::to_string(h.decision_seed);
    e["status_after"] = to_string(h.status_after);
    const bool final_round = h.status_after == TrialStatus::Completed && h.decision.next_dose == 0;
    e["action"] = final_round ? "complete" : std::string(to_string(h.decision.action));
    e["next_dose"] = h.decision.next_dose ? json(h.decision.next_dose) : json(nullptr);
    e["p_hat"] = h.decision.estimate.p_hat;
    e["optimal_dose"] = h.decision.estimate.optimal_dose;
    history.push_back(std::move(e));
  }
  j["history"] = std::move(history);
  return j;
}

// ---------------------------------------------------------------------------

BankCache::BankCache(std::filesystem::path dir, int workers) : dir_(std::move(dir)), workers_(workers) {}

std::shared_ptr<const PriorBank> BankCache::get(const TrialConfig& config, std::uint64_t bank_seed) {
  const BankFingerprint want{config.num_doses, config.target, config.delta, config.samples_per_model, bank_seed};
  const std::string key = "k" + std::to_string(want.num_doses) + "-phi" + shortest(want.target) + "-delta" +
                          shortest(want.delta) + "-jm" + std::to_string(want.samples_per_model) + "-s" +
                          std::to_string(want.seed);
  std::lock_guard lock(mutex_);
  if (auto it = banks_.find(key); it != banks_.end()) return it->second;

  const auto path = dir_ / (key + ".abcb");
  std::shared_ptr<const PriorBank> bank;
  std::error_code ec;
  if (std::filesystem::exists(path, ec)) {
    try {
      auto loaded = std::make_shared<PriorBank>(load_bank(path));
      if (loaded->fingerprint() == want) bank = std::move(loaded);
    } catch (const BankFileError&) {
      // Corrupt cache entry; regenerate below.
    }
  }
  if (!bank) {
    bank = std::make_shared<PriorBank>(generate_bank(config, bank_seed, workers_));
    std::filesystem::create_directories(dir_);
    const auto tmp = path.string() + ".tmp";
    save_bank(*bank, tmp);
    std::filesystem::rename(tmp, path);
  }
  banks_.emplace(key, bank);
  return bank;
}

// ---------------------------------------------------------------------------

TrialStore::TrialStore(std::filesystem::path data_dir, int workers)
    : data_dir_(std::move(data_dir)), banks_(data_dir_ / "banks", workers) {
  std::filesystem::create_directories(data_dir_ / "trials");
}

std::filesystem::path TrialStore::log_path(const std::string& id) const {
  return data_dir_ / "trials" / (id + ".jsonl");
}

std::vector<std::string> TrialStore::recover() {
  std::vector<std::string> problems;
  std::map<std::string, std::shared_ptr<Entry>> loaded;
  for (const auto& file : std::filesystem::directory_iterator(data_dir_ / "trials")) {
    if (file.path().extension() != ".jsonl") continue;
    const std::string id = file.path().stem().string();
    try {
      std::ifstream in(file.path());
      std::vector<json> lines;
      std::string line;
      bool torn_tail = false;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (torn_tail) throw std::runtime_error("malformed line before end of log");
        try {
          lines.push_back(json::parse(line));
        } catch (const json::parse_error&) {
          // A write interrupted by a crash was never acknowledged; drop it.
          torn_tail = true;
        }
      }
      if (lines.empty() || lines.front().at("type") != "created") {
        throw std::runtime_error("log does not start with a created record");
      }
      if (std::any_of(lines.begin(), lines.end(), [](const json& l) { return l.at("type") == "deleted"; })) {
        continue;
      }
      auto entry = std::make_shared<Entry>();
      const json& head = lines.front();
      entry->record.id = head.at("id").get<std::string>();
      if (entry->record.id != id) throw std::runtime_error("log id does not match file name");
      entry->record.created_at = head.at("created_at").get<std::string>();
      entry->record.config = config_from_json(head.at("config"));
      entry->record.seed = head.at("seed").get<std::uint64_t>();
      const auto bank_seed = head.at("bank").at("seed").get<std::uint64_t>();
      entry->bank = banks_.get(entry->record.config, bank_seed);
      entry->record.bank = entry->bank->fingerprint();
      for (std::size_t i = 1; i < lines.size(); ++i) entry->events.push_back(event_from_json(lines[i]));
      replay(entry->record, *entry->bank, entry->events);
      loaded.emplace(id, std::move(entry));
    } catch (const std::exception& e) {
      problems.push_back(file.path().filename().string() + ": " + e.what());
    }
  }
  std::unique_lock lock(map_mutex_);
  trials_ = std::move(loaded);
  return problems;
}

TrialRecord TrialStore::create(const TrialConfig& config, std::optional<std::uint64_t> seed) {
  validate(config);
  auto entry = std::make_shared<Entry>();
  entry->bank = banks_.get(config, kBankSeed);
  TrialRecord& r = entry->record;
  r.id = new_trial_id();
  r.created_at = utc_now();
  r.config = config;
  r.bank = entry->bank->fingerprint();
  r.seed = seed ? *seed : entropy64();
  replay(r, *entry->bank, entry->events);

  const json head{{"type", "created"}, {"id", r.id},     {"created_at", r.created_at},
                  {"config", r.config}, {"seed", r.seed}, {"bank", r.bank}};
  append_durable(log_path(r.id), head.dump());
  fsync_dir(data_dir_ / "trials");

  TrialRecord copy = r;
  std::unique_lock lock(map_mutex_);
  trials_.emplace(r.id, std::move(entry));
  return copy;
}

std::shared_ptr<TrialStore::Entry> TrialStore::find(const std::string& id) const {
  std::shared_lock lock(map_mutex_);
  if (auto it = trials_.find(id); it != trials_.end()) return it->second;
  throw TrialNotFound("no trial with id '" + id + "'");
}

TrialRecord TrialStore::post_cohort(const std::string& id, const CohortRequest& c) {
  auto entry = find(id);
  std::unique_lock lock(entry->mutex);
  if (entry->record.state.status != TrialStatus::Active) {
    throw TrialConflict("trial is " + std::string(to_string(entry->record.state.status)) +
                        "; no further cohorts accepted");
  }
  CohortEvent ev;
  ev.index = static_cast<int>(entry->events.size()) + 1;
  ev.timestamp = utc_now();
  ev.dose = c.dose;
  ev.patients = c.patients;
  ev.dlts = c.dlts;
  ev.override_dose = c.override_dose;

  auto events = entry->events;
  events.push_back(ev);
  TrialRecord next = entry->record;
  replay(next, *entry->bank, events);  // validates before anything is written

  append_durable(log_path(id), event_json(ev).dump());
  entry->events = std::move(events);
  entry->record = std::move(next);
  return entry->record;
}

TrialRecord TrialStore::get(const std::string& id) const {
  auto entry = find(id);
  std::shared_lock lock(entry->mutex);
  return entry->record;
}

std::vector<TrialRecord> TrialStore::list() const {
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::shared_lock lock(map_mutex_);
    for (const auto& [_, e] : trials_) entries.push_back(e);
  }
  std::vector<TrialRecord> out;
  for (const auto& e : entries) {
    std::shared_lock lock(e->mutex);
    out.push_back(e->record);
  }
  std::sort(out.begin(), out.end(), [](const TrialRecord& a, const TrialRecord& b) {
    return a.created_at != b.created_at ? a.created_at < b.created_at : a.id < b.id;
  });
  return out;
}

void TrialStore::remove(const std::string& id) {
  if (!valid_trial_id(id)) throw TrialNotFound("no trial with id '" + id + "'");
  auto entry = find(id);
  std::unique_lock lock(entry->mutex);
  append_durable(log_path(id), json{{"type", "deleted"}, {"timestamp", utc_now()}}.dump());
  std::unique_lock map_lock(map_mutex_);
  trials_.erase(id);
}

}  // namespace abc
