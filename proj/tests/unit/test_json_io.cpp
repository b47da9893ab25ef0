#include <doctest.h>

#include <sstream>

#include "abc/errors.hpp"
#include "abc/json_io.hpp"
#include "abc/report.hpp"

using namespace abc;
using nlohmann::json;

TEST_CASE("config JSON: defaults, round trip and unknown keys") {
  const TrialConfig d = config_from_json(json::object());
  CHECK(d.num_doses == 3);
  CHECK(d.delta == 0.1);
  CHECK(d.bandwidth == 0.01);

  TrialConfig c;
  c.num_doses = 6;
  c.target = 0.2;
  c.delta = 0.07;
  c.alt_stop_threshold = 0.85;
  c.restrict_to_tried = true;
  const TrialConfig back = config_from_json(json::parse(json(c).dump()));
  CHECK(back.num_doses == 6);
  CHECK(back.target == 0.2);
  CHECK(back.delta == 0.07);
  CHECK(back.alt_stop_threshold == 0.85);
  CHECK(back.restrict_to_tried);

  CHECK_THROWS_AS(config_from_json(json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"target", "high"}}), ConfigError);
  CHECK_THROWS_WITH_AS(config_from_json(json{{"target", 0.25}, {"delta", 0.3}}), doctest::Contains("delta"),
                       ConfigError);
}

TEST_CASE("decision and summary JSON round trip exactly") {
  Decision d;
  d.action = Decision::Action::Deescalate;
  d.next_dose = 2;
  d.estimate.p_hat = {0.1 / 3, 0.2718281828459045, 0.4};
  d.estimate.effective_weight_sum = 1234.5678901234567;
  d.estimate.optimal_dose = 1;
  const Decision back = json::parse(json(d).dump()).get<Decision>();
  CHECK(back.action == d.action);
  CHECK(back.next_dose == d.next_dose);
  CHECK(back.estimate.p_hat == d.estimate.p_hat);
  CHECK(back.estimate.effective_weight_sum == d.estimate.effective_weight_sum);

  BatchSummary s;
  s.scenario = "fixed:1";
  s.true_probs = {0.05, 0.1, 0.2};
  s.mtd_index = 3;
  s.replications = 7;
  s.selection_pct = {100.0 / 7, 200.0 / 7, 400.0 / 7};
  s.mean_patients = {12.0 / 7, 3.3, 20.1};
  s.none_pct = 0;
  s.dlt_pct = 21.123456789012345;
  s.mean_trial_dlt_pct = 19.87654321;
  std::stringstream io;
  write_summary_jsonl(io, s);
  write_summary_jsonl(io, s);
  const auto rows = read_summary_jsonl(io);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == s);
  CHECK(rows[1] == s);
}

TEST_CASE("summary CSV has one row per dose") {
  BatchSummary s;
  s.scenario = "a,b";
  s.true_probs = {0.1, 0.2};
  s.selection_pct = {25, 75};
  s.mean_patients = {10, 26};
  std::ostringstream out;
  out << kSummaryCsvHeader << '\n';
  write_summary_csv(out, s);
  const std::string text = out.str();
  CHECK(text.rfind("scenario,dose,true_p,sel_pct,mean_n,dlt_pct,none_pct,overdose_sel_pct,overdose_alloc_pct\n", 0) == 0);
  CHECK(text.find("\"a,b\",1,0.10000000000000001,25,10,") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("state and status strings") {
  TrialState s;
  s.dlt_counts = {1, 0};
  s.patient_counts = {3, 0};
  s.status = TrialStatus::StoppedForSafety;
  const TrialState back = json(s).get<TrialState>();
  CHECK(back == s);
  CHECK_THROWS_AS(status_from_string("paused"), std::invalid_argument);
  CHECK(action_from_string("escalate") == Decision::Action::Escalate);
}
