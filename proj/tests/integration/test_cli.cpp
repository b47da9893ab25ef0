#include <doctest.h>

#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "abc/conduct.hpp"
#include "abc/json_io.hpp"
#include "abc/prior_bank.hpp"
#include "abc/report.hpp"
#include "abc/scenario.hpp"
#include "abc/trial_sim.hpp"
#include "cli.hpp"
#include "temp_dir.hpp"

using namespace abc;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "abc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("list parsing") {
  CHECK(cli::parse_int_list("0, 1,2") == std::vector<int>{0, 1, 2});
  CHECK(cli::parse_double_list("0.1,0.05") == std::vector<double>{0.1, 0.05});
  const auto grid = cli::parse_delta_grid("0,0.2,random");
  REQUIRE(grid.size() == 3);
  CHECK(grid[1] == 0.2);
  CHECK_FALSE(grid[2].has_value());
  CHECK_THROWS_AS(cli::parse_int_list("1,,2"), std::invalid_argument);
  CHECK_THROWS_AS(cli::parse_int_list("1.5"), std::invalid_argument);
  CHECK_THROWS_AS(cli::parse_delta_grid("0.1,rand"), std::invalid_argument);
}

TEST_CASE("prior-gen writes a full bank and is byte-reproducible") {
  test::TempDir dir;
  const auto a = dir.path() / "a.abcb";
  const auto b = dir.path() / "b.abcb";
  const std::vector<std::string> base{"--k", "3", "--phi", "0.25", "--delta", "0.1", "--seed", "7", "prior-gen"};
  auto args = base;
  args.insert(args.end(), {"-o", a.string()});
  const Run r1 = run_cli(args);
  REQUIRE(r1.code == cli::kOk);
  CHECK(r1.out.find("J=80000") != std::string::npos);
  args = base;
  args.insert(args.end(), {"-o", b.string(), "--json"});
  const Run r2 = run_cli(args);
  REQUIRE(r2.code == cli::kOk);
  CHECK(nlohmann::json::parse(r2.out).at("samples") == 80000);
  CHECK(slurp(a) == slurp(b));
  CHECK(load_bank(a).size() == 80000);
}

TEST_CASE("exit codes") {
  test::TempDir dir;
  const auto bank = (dir.path() / "x.abcb").string();
  SUBCASE("delta >= phi is a validation error naming the constraint") {
    const Run r = run_cli({"--phi", "0.25", "--delta", "0.25", "--seed", "1", "prior-gen", "-o", bank});
    CHECK(r.code == cli::kValidation);
    CHECK(r.err.find("delta") != std::string::npos);
  }
  SUBCASE("--reps 0") { CHECK(run_cli({"simulate", "--scenario", "fixed:1", "--reps", "0"}).code == cli::kUsage); }
  SUBCASE("unknown scenario") {
    CHECK(run_cli({"--seed", "1", "simulate", "--scenario", "fixed:9", "--reps", "1"}).code == cli::kUsage);
  }
  SUBCASE("dimension mismatch") {
    CHECK(run_cli({"--seed", "1", "--k", "4", "simulate", "--scenario", "real", "--reps", "1"}).code ==
          cli::kValidation);
  }
  SUBCASE("malformed grid") {
    CHECK(run_cli({"--seed", "1", "sweep", "--scenario", "real", "--hs", "0.1;0.2"}).code == cli::kUsage);
  }
  SUBCASE("y > m") {
    CHECK(run_cli({"--seed", "1", "--jm", "500", "next-dose", "--y", "2,0,0", "--m", "1,0,0", "--dose", "1"}).code ==
          cli::kValidation);
  }
  SUBCASE("missing bank file") {
    CHECK(run_cli({"--seed", "1", "simulate", "--scenario", "real", "--reps", "1", "--bank", bank}).code ==
          cli::kIoError);
  }
  SUBCASE("no subcommand") { CHECK(run_cli({}).code == cli::kUsage); }
}

TEST_CASE("config file mirrors the flags and rejects unknown keys") {
  test::TempDir dir;
  const auto cfg = dir.path() / "run.toml";
  const auto bank = (dir.path() / "c.abcb").string();
  {
    std::ofstream(cfg) << "k = 4\nphi = 0.3\ndelta = 0.05\njm = 500\nseed = 11\n";
  }
  const Run ok = run_cli({"--config", cfg.string(), "prior-gen", "-o", bank});
  REQUIRE(ok.code == cli::kOk);
  const auto f = load_bank(bank).fingerprint();
  CHECK(f.num_doses == 4);
  CHECK(f.target == 0.3);
  CHECK(f.delta == 0.05);
  CHECK(f.samples_per_model == 500);
  CHECK(f.seed == 11);
  {
    std::ofstream(cfg) << "k = 4\nbandwith = 0.1\n";
  }
  CHECK(run_cli({"--config", cfg.string(), "prior-gen", "-o", bank}).code == cli::kValidation);
}

TEST_CASE("omitting --seed prints the drawn seed and that seed reproduces the run") {
  test::TempDir dir;
  const auto a = dir.path() / "a.abcb";
  const auto b = dir.path() / "b.abcb";
  const Run r = run_cli({"--jm", "300", "prior-gen", "-o", a.string()});
  REQUIRE(r.code == cli::kOk);
  const auto pos = r.err.find("seed: ");
  REQUIRE(pos != std::string::npos);
  const std::string seed = r.err.substr(pos + 6, r.err.find('\n', pos) - pos - 6);
  REQUIRE(run_cli({"--jm", "300", "--seed", seed, "prior-gen", "-o", b.string()}).code == cli::kOk);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("next-dose: walkthrough escalation, safety stop and prior-only start") {
  const std::vector<std::string> design{"--k", "3", "--phi", "0.25", "--jm", "4000", "--seed", "3"};
  auto args = design;
  args.insert(args.end(), {"next-dose", "--y", "0,0,0", "--m", "3,0,0", "--dose", "1", "--json"});
  Run r = run_cli(args);
  REQUIRE(r.code == cli::kOk);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("stop") == false);
  CHECK(j.at("decision").at("action") == "escalate");
  CHECK(j.at("decision").at("next_dose") == 2);

  args = design;
  args.insert(args.end(), {"next-dose", "--y", "3,0,0", "--m", "3,0,0", "--dose", "1"});
  r = run_cli(args);
  CHECK(r.code == cli::kSafetyStop);
  CHECK(r.out.find("stop: true") != std::string::npos);

  args = design;
  args.insert(args.end(), {"next-dose", "--y", "0,0,0", "--m", "0,0,0", "--dose", "1", "--json"});
  r = run_cli(args);
  REQUIRE(r.code == cli::kOk);
  j = nlohmann::json::parse(r.out);
  const int next = j.at("decision").at("next_dose");
  CHECK(next >= 1);
  CHECK(next <= 2);
}

TEST_CASE("next-dose JSON round-trips to the engine's decision") {
  TrialConfig c;
  c.samples_per_model = 3000;
  const PriorBank bank = generate_bank(c, TrialStore::kBankSeed);
  TrialState s = TrialState::initial(c);
  s.record_cohort(1, 3, 0, c);
  s.record_cohort(1, 3, 1, c);
  RandomStream rng(99);
  const Decision expected = recommend(bank, s, c, rng);

  const Run r = run_cli({"--jm", "3000", "--seed", "99", "next-dose", "--y", "1,0,0", "--m", "6,0,0", "--dose", "1",
                         "--json"});
  REQUIRE(r.code == cli::kOk);
  const auto got = nlohmann::json::parse(r.out).at("decision").get<Decision>();
  CHECK(got.action == expected.action);
  CHECK(got.next_dose == expected.next_dose);
  CHECK(got.estimate.optimal_dose == expected.estimate.optimal_dose);
  CHECK(got.estimate.p_hat == expected.estimate.p_hat);
  CHECK(got.estimate.effective_weight_sum == expected.estimate.effective_weight_sum);
}

TEST_CASE("simulate output round-trips and matches a direct batch run") {
  const Run r = run_cli({"--jm", "1000", "--seed", "5", "simulate", "--scenario", "real", "--scenario", "fixed:2",
                         "--reps", "12", "--format", "jsonl"});
  REQUIRE(r.code == cli::kOk);
  std::istringstream in(r.out);
  const auto rows = read_summary_jsonl(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].scenario == "real");
  CHECK(rows[1].scenario == "fixed:2");

  const Scenario real = *find_fixed_scenario("real");
  TrialConfig c;
  c.num_doses = 3;
  c.target = real.target;
  c.samples_per_model = 1000;
  const PriorBank bank = generate_bank(c, derive_seed(5, 1));
  CHECK(rows[0] == run_batch(real, c, bank, 12, derive_seed(5, 2, 0)));

  std::ostringstream again;
  write_summary_jsonl(again, rows[0]);
  write_summary_jsonl(again, rows[1]);
  CHECK(again.str() == r.out);
}

TEST_CASE("simulate CSV: header, one row per dose, file order, trajectories") {
  test::TempDir dir;
  const auto scen = dir.path() / "custom.csv";
  {
    std::ofstream(scen) << "# two curves\nb, 0.3, 0.1, 0.3, 0.5\na, 0.3, 0.05, 0.1, 0.2\n";
  }
  const auto traj = dir.path() / "t.jsonl";
  const Run r = run_cli({"--jm", "500", "--seed", "8", "--phi", "0.3", "simulate", "--scenario-file", scen.string(),
                         "--reps", "4", "--trajectories", traj.string()});
  REQUIRE(r.code == cli::kOk);
  std::istringstream in(r.out);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 7);
  CHECK(lines[0] == kSummaryCsvHeader);
  CHECK(lines[1].rfind("b,1,", 0) == 0);
  CHECK(lines[4].rfind("a,1,", 0) == 0);

  std::ifstream t(traj);
  int n = 0;
  while (std::getline(t, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("cohorts").is_array());
    ++n;
  }
  CHECK(n == 8);
}

TEST_CASE("sweep: grid layout and random-scenario mu tags") {
  Run r = run_cli({"--jm", "300", "--seed", "2", "sweep", "--scenario", "real", "--reps", "2"});
  REQUIRE(r.code == cli::kOk);
  std::istringstream in(r.out);
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 24);

  r = run_cli({"--k", "5", "--phi", "0.3", "--n", "30", "--jm", "300", "--seed", "2", "sweep", "--random", "3",
               "--delta-target", "0.1", "--calibration-draws", "4000", "--deltas", "0.1", "--hs", "0.01", "--reps", "2",
               "--format", "jsonl"});
  REQUIRE(r.code == cli::kOk);
  std::istringstream jl(r.out);
  int n = 0;
  std::optional<double> mu;
  while (std::getline(jl, line)) {
    const auto j = nlohmann::json::parse(line);
    REQUIRE(j.at("mu").is_number());
    if (mu) CHECK(j.at("mu").get<double>() == *mu);
    mu = j.at("mu").get<double>();
    ++n;
  }
  CHECK(n == 3);
  REQUIRE(mu);
  CHECK(*mu > 0.0);
}

TEST_CASE("scenario-gen: calibrated header and re-readable scenarios") {
  const Run r = run_cli({"--k", "5", "--phi", "0.3", "--seed", "4", "scenario-gen", "--count", "50", "--delta-target",
                         "0.1", "--calibration-draws", "4000"});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.rfind("# mu=", 0) == 0);
  std::istringstream in(r.out);
  const auto s = read_scenarios(in);
  CHECK(s.size() == 50);
  for (const auto& x : s) CHECK(x.num_doses() == 5);

  CHECK(run_cli({"--k", "5", "--phi", "0.3", "--seed", "4", "scenario-gen", "--delta-target", "0.01"}).code ==
        cli::kValidation);
}
