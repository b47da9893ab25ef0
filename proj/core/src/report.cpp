#include "abc/report.hpp"

#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "abc/json_io.hpp"

namespace abc {

namespace {

// Scenario labels may be user supplied; quote anything that would break a CSV cell.
std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct PrecisionGuard {
  std::ostream& out;
  std::streamsize saved;
  explicit PrecisionGuard(std::ostream& o)
      : out(o), saved(o.precision(std::numeric_limits<double>::max_digits10)) {}
  ~PrecisionGuard() { out.precision(saved); }
};

}  // namespace

void write_summary_csv(std::ostream& out, const BatchSummary& s) {
  PrecisionGuard guard(out);
  for (std::size_t k = 0; k < s.selection_pct.size(); ++k) {
    out << csv_cell(s.scenario) << ',' << (k + 1) << ',' << s.true_probs[k] << ',' << s.selection_pct[k]
        << ',' << s.mean_patients[k] << ',' << s.dlt_pct << ',' << s.none_pct << ','
        << s.overdose_selection_pct << ',' << s.overdose_allocation_pct << '\n';
  }
}

void write_summary_jsonl(std::ostream& out, const BatchSummary& s) {
  out << nlohmann::json(s).dump() << '\n';
}

std::vector<BatchSummary> read_summary_jsonl(std::istream& in) {
  std::vector<BatchSummary> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(nlohmann::json::parse(line).get<BatchSummary>());
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                     const std::vector<Scenario>& scenarios) {
  PrecisionGuard guard(out);
  for (const auto& r : rows) {
    const auto& s = r.summary;
    if (r.delta) {
      out << *r.delta;
    } else {
      out << "random";
    }
    out << ',' << r.bandwidth << ',' << r.scenario_index << ','
        << csv_cell(scenarios.at(r.scenario_index).label) << ',';
    if (r.mu) out << *r.mu;
    out << ',' << s.mtd_index << ',' << s.mtd_selection_pct << ',' << s.mtd_allocation_pct << ','
        << s.none_pct << ',' << s.dlt_pct << ',' << s.overdose_selection_pct << ','
        << s.overdose_allocation_pct << '\n';
  }
}

void write_sweep_jsonl(std::ostream& out, const std::vector<SweepRow>& rows,
                       const std::vector<Scenario>& scenarios) {
  for (const auto& r : rows) {
    nlohmann::json j{{"delta", r.delta ? nlohmann::json(*r.delta) : nlohmann::json("random")},
                     {"delta_used", r.delta_used},
                     {"h", r.bandwidth},
                     {"scenario_index", r.scenario_index},
                     {"scenario", scenarios.at(r.scenario_index)},
                     {"mu", r.mu ? nlohmann::json(*r.mu) : nlohmann::json(nullptr)},
                     {"summary", r.summary}};
    out << j.dump() << '\n';
  }
}

}  // namespace abc
