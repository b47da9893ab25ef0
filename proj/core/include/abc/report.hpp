#pragma once

#include <iosfwd>
#include <string_view>
#include <vector>

#include "abc/trial_sim.hpp"

namespace abc {

inline constexpr std::string_view kSummaryCsvHeader =
    "scenario,dose,true_p,sel_pct,mean_n,dlt_pct,none_pct,overdose_sel_pct,overdose_alloc_pct";

inline constexpr std::string_view kSweepCsvHeader =
    "delta,h,scenario_index,scenario,mu,mtd_index,mtd_sel_pct,mtd_alloc_pct,none_pct,dlt_pct,"
    "overdose_sel_pct,overdose_alloc_pct";

// One CSV row per dose; trial-level columns repeat on every row.
void write_summary_csv(std::ostream& out, const BatchSummary& summary);

// One JSON object per line.
void write_summary_jsonl(std::ostream& out, const BatchSummary& summary);
std::vector<BatchSummary> read_summary_jsonl(std::istream& in);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                     const std::vector<Scenario>& scenarios);
void write_sweep_jsonl(std::ostream& out, const std::vector<SweepRow>& rows,
                       const std::vector<Scenario>& scenarios);

}  // namespace abc
