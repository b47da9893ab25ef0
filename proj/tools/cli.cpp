#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <system_error>

#include <nlohmann/json.hpp>

#include "abc/conduct.hpp"
#include "abc/errors.hpp"
#include "abc/json_io.hpp"
#include "abc/parallel.hpp"
#include "abc/prior_bank.hpp"
#include "abc/report.hpp"
#include "abc/scenario.hpp"
#include "abc/trial_sim.hpp"

namespace abc::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

std::vector<std::string_view> split(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    out.push_back(trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field) {
  T v{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw std::invalid_argument("bad number '" + std::string(field) + "'");
  }
  return v;
}

// Shared design options; they live on the root command and fall through
// from every subcommand.
struct DesignOptions {
  int num_doses = 3;
  double target = 0.25;
  double delta = 0.1;
  double bandwidth = 0.01;
  int samples_per_model = 20000;
  int cohort_size = 3;
  int max_patients = 36;
  int start_dose = 1;
  double stop_threshold = 0.95;
  std::optional<double> alt_stop_threshold;
  bool alt_stop = false;
  bool restrict_to_tried = false;
  std::optional<std::uint64_t> seed;
  int workers = 0;

  [[nodiscard]] TrialConfig config() const {
    TrialConfig c;
    c.num_doses = num_doses;
    c.target = target;
    c.delta = delta;
    c.bandwidth = bandwidth;
    c.samples_per_model = samples_per_model;
    c.cohort_size = cohort_size;
    c.max_patients = max_patients;
    c.start_dose = start_dose;
    c.stop_threshold = stop_threshold;
    c.alt_stop_threshold = alt_stop_threshold;
    if (alt_stop && !c.alt_stop_threshold) c.alt_stop_threshold = kDefaultAltStopThreshold;
    c.restrict_to_tried = restrict_to_tried;
    return c;
  }
};

struct GeneratorOptions {
  double sigma0 = 0.05;
  double sigma1 = 0.35;
  double sigma2 = 0.35;
  double mu = 0.0;
  std::optional<double> delta_target;
  int calibration_draws = 20000;

  void add_to(CLI::App* app) {
    app->add_option("--sigma0", sigma0, "Probit-scale sd of the MTD probability")->capture_default_str();
    app->add_option("--sigma1", sigma1, "Sd of the downward steps")->capture_default_str();
    app->add_option("--sigma2", sigma2, "Sd of the upward steps")->capture_default_str();
    app->add_option("--mu", mu, "Mean of the step noise (ignored with --delta-target)")->capture_default_str();
    app->add_option("--delta-target", delta_target,
                    "Calibrate mu so the mean neighbor gap around the MTD equals this value");
    app->add_option("--calibration-draws", calibration_draws, "Scenario draws per calibration step")
        ->check(CLI::Range(1, std::numeric_limits<int>::max()))
        ->capture_default_str();
  }

  [[nodiscard]] ScenarioGenSpec spec(const DesignOptions& d) const {
    ScenarioGenSpec s;
    s.num_doses = d.num_doses;
    s.target = d.target;
    s.sigma0 = sigma0;
    s.sigma1 = sigma1;
    s.sigma2 = sigma2;
    s.mu = mu;
    s.delta_target = delta_target;
    return s;
  }
};

// Resolves the master seed, drawing one from the OS when none was given.
std::uint64_t resolve_seed(const DesignOptions& d, std::ostream& err) {
  if (d.seed) return *d.seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  err << "seed: " << s << '\n';
  return s;
}

int resolve_workers(const DesignOptions& d) { return d.workers > 0 ? d.workers : default_workers(); }

// Output sink: a file when a path is given, otherwise `fallback`.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::trunc);
      if (!*file_) throw IoError("cannot open " + path + " for writing");
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw IoError("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

std::vector<Scenario> load_scenarios(const std::vector<std::string>& names, const std::string& file) {
  std::vector<Scenario> out;
  for (const auto& name : names) {
    if (name == "all") {
      out.insert(out.end(), fixed_scenarios().begin(), fixed_scenarios().end());
      continue;
    }
    auto s = find_fixed_scenario(name);
    if (!s) throw UsageError("unknown scenario '" + name + "' (expected fixed:1..fixed:5, real or all)");
    out.push_back(*s);
  }
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open scenario file " + file);
    auto from_file = read_scenarios(in);
    out.insert(out.end(), from_file.begin(), from_file.end());
  }
  if (out.empty()) throw UsageError("no scenarios given (use --scenario or --scenario-file)");
  return out;
}

// Design config for a scenario: K and phi come from the scenario; explicit
// --k / --phi must agree with it.
TrialConfig config_for(const Scenario& s, const DesignOptions& d, const CLI::App& root) {
  TrialConfig c = d.config();
  if (root.count("--k") && d.num_doses != s.num_doses()) {
    throw ConfigError("--k " + std::to_string(d.num_doses) + " does not match scenario " + s.label + " (K=" +
                      std::to_string(s.num_doses()) + ")");
  }
  if (root.count("--phi") && d.target != s.target) {
    std::ostringstream msg;
    msg << "--phi " << d.target << " does not match scenario " << s.label << " (phi=" << s.target << ")";
    throw ConfigError(msg.str());
  }
  c.num_doses = s.num_doses();
  c.target = s.target;
  validate(c);
  return c;
}

void print_fingerprint(std::ostream& out, const PriorBank& bank, const std::string& path) {
  const auto& f = bank.fingerprint();
  out << "bank " << path << ": K=" << f.num_doses << " phi=" << f.target << " delta=" << f.delta
      << " J_m=" << f.samples_per_model << " J=" << bank.size() << " seed=" << f.seed << '\n';
}

// ---------------------------------------------------------------------------

int cmd_prior_gen(const DesignOptions& d, const std::string& path, bool json_out, std::ostream& out,
                  std::ostream& err) {
  const TrialConfig c = d.config();
  validate(c);
  const std::uint64_t seed = resolve_seed(d, err);
  const PriorBank bank = generate_bank(c, seed, resolve_workers(d));
  save_bank(bank, path);
  if (json_out) {
    out << nlohmann::json{{"path", path}, {"fingerprint", bank.fingerprint()}, {"samples", bank.size()}}.dump()
        << '\n';
  } else {
    print_fingerprint(out, bank, path);
  }
  return kOk;
}

int cmd_scenario_gen(const DesignOptions& d, const GeneratorOptions& g, int count, const std::string& path,
                     std::ostream& out, std::ostream& err) {
  ScenarioGenSpec spec = g.spec(d);
  spec.validate();
  const std::uint64_t seed = resolve_seed(d, err);
  Sink sink(path, out);
  if (spec.delta_target) {
    CalibrationOptions opt;
    opt.draws = g.calibration_draws;
    spec.mu = calibrate_mu(spec, *spec.delta_target, derive_seed(seed, 1), opt);
    const double measured = measure_delta(spec, opt.draws, derive_seed(seed, 1));
    *sink << "# mu=" << spec.mu << " delta_target=" << *spec.delta_target << " delta_measured=" << measured
          << '\n';
  } else {
    *sink << "# mu=" << spec.mu << '\n';
  }
  RandomStream rng(derive_seed(seed, 2));
  for (int i = 0; i < count; ++i) {
    Scenario s = generate_random_scenario(spec, rng);
    s.label = "random:" + std::to_string(i + 1);
    *sink << format_scenario_line(s) << '\n';
  }
  sink.finish();
  return kOk;
}

struct SimulateArgs {
  std::vector<std::string> scenarios;
  std::string scenario_file;
  int reps = 1000;
  std::string bank_path;
  std::string format = "csv";
  std::string out_path;
  std::string trajectories_path;
};

int cmd_simulate(const CLI::App& root, const DesignOptions& d, const SimulateArgs& a, std::ostream& out,
                 std::ostream& err) {
  const auto scenarios = load_scenarios(a.scenarios, a.scenario_file);
  std::vector<TrialConfig> configs;
  for (const auto& s : scenarios) configs.push_back(config_for(s, d, root));

  const std::uint64_t seed = resolve_seed(d, err);
  const int workers = resolve_workers(d);
  std::optional<PriorBank> file_bank;
  if (!a.bank_path.empty()) file_bank.emplace(load_bank(a.bank_path));
  for (const auto& c : configs) {
    if (file_bank) file_bank->check_matches(c);
  }

  Sink sink(a.out_path, out);
  std::unique_ptr<Sink> traj;
  if (!a.trajectories_path.empty()) traj = std::make_unique<Sink>(a.trajectories_path, out);
  if (a.format == "csv") *sink << kSummaryCsvHeader << '\n';

  // One generated bank per (K, phi); the other design constants are shared.
  std::map<std::pair<int, double>, std::shared_ptr<const PriorBank>> banks;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const Scenario& s = scenarios[i];
    const TrialConfig& c = configs[i];
    const PriorBank* bank = file_bank ? &*file_bank : nullptr;
    if (!bank) {
      auto& slot = banks[{c.num_doses, c.target}];
      if (!slot) slot = std::make_shared<PriorBank>(generate_bank(c, derive_seed(seed, 1), workers));
      bank = slot.get();
    }
    std::vector<TrialResult> trials;
    const BatchSummary summary =
        run_batch(s, c, *bank, a.reps, derive_seed(seed, 2, i), workers, traj ? &trials : nullptr);
    if (a.format == "csv") {
      write_summary_csv(*sink, summary);
    } else {
      write_summary_jsonl(*sink, summary);
    }
    if (traj) {
      for (std::size_t r = 0; r < trials.size(); ++r) {
        const auto& t = trials[r];
        **traj << nlohmann::json{{"scenario", s.label},
                                 {"replication", r},
                                 {"selected_mtd", t.selected_mtd},
                                 {"stopped_early", t.stopped_early},
                                 {"cohorts", t.trajectory}}
                      .dump()
               << '\n';
      }
    }
  }
  sink.finish();
  if (traj) traj->finish();
  return kOk;
}

struct SweepArgs {
  std::string deltas = "0,0.05,0.1,0.15,0.2,random";
  std::string bandwidths = "0.1,0.05,0.01,0.005";
  std::vector<std::string> scenarios;
  std::string scenario_file;
  int random_count = 0;
  int reps = 100;
  std::string format = "csv";
  std::string out_path;
};

int cmd_sweep(const CLI::App& root, const DesignOptions& d, const GeneratorOptions& g, const SweepArgs& a,
              std::ostream& out, std::ostream& err) {
  SweepGrid grid;
  try {
    grid.deltas = parse_delta_grid(a.deltas);
    grid.bandwidths = parse_double_list(a.bandwidths);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("malformed grid: ") + e.what());
  }

  const std::uint64_t seed = resolve_seed(d, err);
  TrialConfig base = d.config();
  SweepOptions opt;
  opt.replications = a.reps;
  opt.seed = derive_seed(seed, 2);
  opt.workers = resolve_workers(d);

  std::vector<Scenario> scenarios;
  if (a.random_count > 0) {
    if (!a.scenarios.empty() || !a.scenario_file.empty()) {
      throw UsageError("--random cannot be combined with --scenario or --scenario-file");
    }
    ScenarioGenSpec spec = g.spec(d);
    spec.validate();
    if (spec.delta_target) {
      CalibrationOptions copt;
      copt.draws = g.calibration_draws;
      spec.mu = calibrate_mu(spec, *spec.delta_target, derive_seed(seed, 1), copt);
      err << "calibrated mu=" << spec.mu << " for delta_target=" << *spec.delta_target << '\n';
    }
    opt.mu_tag = spec.mu;
    RandomStream rng(derive_seed(seed, 3));
    for (int i = 0; i < a.random_count; ++i) {
      scenarios.push_back(generate_random_scenario(spec, rng));
      scenarios.back().label = "random:" + std::to_string(i + 1);
    }
  } else {
    scenarios = load_scenarios(a.scenarios, a.scenario_file);
    for (const auto& s : scenarios) {
      if (s.num_doses() != scenarios.front().num_doses() || s.target != scenarios.front().target) {
        throw ConfigError("sweep scenarios must share K and phi");
      }
    }
    base = config_for(scenarios.front(), d, root);
  }
  for (const auto& delta : grid.deltas) {
    TrialConfig probe = base;
    if (delta) probe.delta = *delta;
    for (double h : grid.bandwidths) {
      probe.bandwidth = h;
      validate(probe);
    }
  }

  const auto rows = sweep(base, grid, scenarios, opt);
  Sink sink(a.out_path, out);
  if (a.format == "csv") {
    *sink << kSweepCsvHeader << '\n';
    write_sweep_csv(*sink, rows, scenarios);
  } else {
    write_sweep_jsonl(*sink, rows, scenarios);
  }
  sink.finish();
  return kOk;
}

struct NextDoseArgs {
  std::string y;
  std::string m;
  int dose = 1;
  std::string bank_path;
  std::uint64_t bank_seed = TrialStore::kBankSeed;
  bool json = false;
};

int cmd_next_dose(const DesignOptions& d, const NextDoseArgs& a, std::ostream& out, std::ostream& err) {
  const TrialConfig c = d.config();
  validate(c);
  TrialState state = TrialState::initial(c);
  try {
    state.dlt_counts = parse_int_list(a.y);
    state.patient_counts = parse_int_list(a.m);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--y/--m: ") + e.what());
  }
  state.current_dose = a.dose;
  state.check(c);

  const std::uint64_t seed = resolve_seed(d, err);
  std::optional<PriorBank> bank;
  if (!a.bank_path.empty()) {
    bank.emplace(load_bank(a.bank_path));
  } else {
    bank.emplace(generate_bank(c, a.bank_seed, resolve_workers(d)));
  }
  RandomStream rng(seed);
  const Decision decision = recommend(*bank, state, c, rng);
  const bool stop = decision.action == Decision::Action::StopSafety;

  if (a.json) {
    out << nlohmann::json{{"decision", decision}, {"stop", stop}, {"seed", std::to_string(seed)}}.dump() << '\n';
  } else {
    std::ostringstream p;
    p.precision(4);
    for (std::size_t k = 0; k < decision.estimate.p_hat.size(); ++k) {
      p << (k ? " " : "") << decision.estimate.p_hat[k];
    }
    out << "p_hat: " << p.str() << '\n'
        << "optimal_dose: " << decision.estimate.optimal_dose << '\n'
        << "decision: " << to_string(decision.action) << '\n';
    if (stop) {
      out << "next_dose: none\n";
    } else {
      out << "next_dose: " << decision.next_dose << '\n';
    }
    out << "stop: " << (stop ? "true" : "false") << '\n';
  }
  return stop ? kSafetyStop : kOk;
}

}  // namespace

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  for (auto f : split(text)) out.push_back(parse_number<double>(f));
  return out;
}

std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> out;
  for (auto f : split(text)) out.push_back(parse_number<int>(f));
  return out;
}

std::vector<std::optional<double>> parse_delta_grid(std::string_view text) {
  std::vector<std::optional<double>> out;
  for (auto f : split(text)) {
    if (f == "random") {
      out.emplace_back(std::nullopt);
    } else {
      out.emplace_back(parse_number<double>(f));
    }
  }
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ABC phase-I dose finding: prior banks, scenarios, simulation and dose recommendations", "abc"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file with option values (unknown keys are rejected)");
  app.allow_config_extras(CLI::config_extras_mode::error);

  DesignOptions d;
  app.add_option("--k", d.num_doses, "Number of dose levels K")->capture_default_str();
  app.add_option("--phi", d.target, "Target DLT rate")->capture_default_str();
  app.add_option("--delta", d.delta, "Half-width of the target interval in the prior")->capture_default_str();
  app.add_option("--h", d.bandwidth, "Kernel bandwidth")->capture_default_str();
  app.add_option("--jm", d.samples_per_model, "Prior samples per model")->capture_default_str();
  app.add_option("--cohort", d.cohort_size, "Cohort size")->capture_default_str();
  app.add_option("--n", d.max_patients, "Maximum number of patients")->capture_default_str();
  app.add_option("--start-dose", d.start_dose, "First dose level")->capture_default_str();
  app.add_option("--stop-threshold", d.stop_threshold, "Posterior threshold of the safety rule")
      ->capture_default_str();
  app.add_option("--alt-stop-threshold", d.alt_stop_threshold,
                 "Enable the weighted-bank stopping rule with this threshold");
  app.add_flag("--alt-stop", d.alt_stop, "Enable the weighted-bank stopping rule (threshold 0.9)");
  app.add_flag("--restrict-to-tried", d.restrict_to_tried, "Only consider doses with patients in the argmin");
  app.add_option("--seed", d.seed, "Master seed (drawn from the OS and printed when omitted)");
  app.add_option("--workers", d.workers, "Worker threads (0 = all cores)")->capture_default_str();

  auto* prior = app.add_subcommand("prior-gen", "Generate a prior bank file");
  std::string prior_out;
  bool prior_json = false;
  prior->add_option("-o,--out", prior_out, "Output bank file")->required();
  prior->add_flag("--json", prior_json, "Print the fingerprint as JSON");

  auto* scen = app.add_subcommand("scenario-gen", "Generate random dose-toxicity scenarios");
  GeneratorOptions gen;
  gen.add_to(scen);
  int scen_count = 10;
  std::string scen_out;
  scen->add_option("--count", scen_count, "Number of scenarios")->check(CLI::Range(1, std::numeric_limits<int>::max()))->capture_default_str();
  scen->add_option("-o,--out", scen_out, "Output scenario file (default stdout)");

  auto* sim = app.add_subcommand("simulate", "Simulate trials and summarize operating characteristics");
  SimulateArgs sa;
  sim->add_option("--scenario", sa.scenarios, "fixed:1..fixed:5, real or all (repeatable)");
  sim->add_option("--scenario-file", sa.scenario_file, "Scenario file: label, phi, p1, ..., pK per line");
  sim->add_option("--reps", sa.reps, "Replications per scenario")->check(CLI::Range(1, std::numeric_limits<int>::max()))->capture_default_str();
  sim->add_option("--bank", sa.bank_path, "Prior bank file (generated on the fly when omitted)");
  sim->add_option("--format", sa.format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}))->capture_default_str();
  sim->add_option("-o,--out", sa.out_path, "Summary output file (default stdout)");
  sim->add_option("--trajectories", sa.trajectories_path, "Write every trial's cohorts as JSON lines");

  auto* sw = app.add_subcommand("sweep", "Batch summaries over a (delta, h) grid");
  SweepArgs wa;
  GeneratorOptions sweep_gen;
  sweep_gen.add_to(sw);
  sw->add_option("--deltas", wa.deltas, "Comma-separated delta values; 'random' draws U(0, 0.2) per scenario")
      ->capture_default_str();
  sw->add_option("--hs", wa.bandwidths, "Comma-separated bandwidths")->capture_default_str();
  sw->add_option("--scenario", wa.scenarios, "fixed:1..fixed:5, real or all (repeatable)");
  sw->add_option("--scenario-file", wa.scenario_file, "Scenario file");
  sw->add_option("--random", wa.random_count, "Generate this many random scenarios instead")
      ->check(CLI::NonNegativeNumber);
  sw->add_option("--reps", wa.reps, "Replications per cell")->check(CLI::Range(1, std::numeric_limits<int>::max()))->capture_default_str();
  sw->add_option("--format", wa.format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}))->capture_default_str();
  sw->add_option("-o,--out", wa.out_path, "Output file (default stdout)");

  auto* nd = app.add_subcommand("next-dose", "Recommend the dose for the next cohort");
  NextDoseArgs na;
  nd->add_option("--y", na.y, "DLT counts per dose, e.g. 0,0,0")->required();
  nd->add_option("--m", na.m, "Patients per dose, e.g. 3,0,0")->required();
  nd->add_option("--dose", na.dose, "Current dose level")->required();
  nd->add_option("--bank", na.bank_path, "Prior bank file");
  nd->add_option("--bank-seed", na.bank_seed, "Seed of the generated bank when --bank is omitted")
      ->capture_default_str();
  nd->add_flag("--json", na.json, "Print the recommendation as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ConfigError& e) {
    // Bad or unknown keys in the --config file.
    app.exit(e, out, err);
    return kValidation;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*prior) return cmd_prior_gen(d, prior_out, prior_json, out, err);
    if (*scen) return cmd_scenario_gen(d, gen, scen_count, scen_out, out, err);
    if (*sim) return cmd_simulate(app, d, sa, out, err);
    if (*sw) return cmd_sweep(app, d, sweep_gen, wa, out, err);
    if (*nd) return cmd_next_dose(d, na, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const BankFileError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::system_error& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    // ConfigError, CountError, FingerprintMismatch, invalid scenarios and
    // unreachable calibration targets.
    err << "validation error: " << e.what() << '\n';
    return kValidation;
  }
  return kUsage;
}

}  // namespace abc::cli
