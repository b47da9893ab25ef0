#include <benchmark/benchmark.h>

#include <vector>

#include "abc/engine.hpp"
#include "abc/prior_bank.hpp"
#include "abc/random.hpp"
#include "abc/scenario.hpp"
#include "abc/special_functions.hpp"
#include "abc/trial_sim.hpp"
#include "abc/weighted_median.hpp"

namespace {

abc::TrialConfig config_for(const abc::Scenario& s, int jm) {
  abc::TrialConfig c;
  c.num_doses = s.num_doses();
  c.target = s.target;
  c.samples_per_model = jm;
  c.max_patients = 36;
  return c;
}

const abc::Scenario& scenario1() {
  static const abc::Scenario s = *abc::find_fixed_scenario("fixed:1");
  return s;
}

const abc::PriorBank& bank(int jm) {
  static const abc::PriorBank small = abc::generate_bank(config_for(scenario1(), 5000), 1);
  static const abc::PriorBank full = abc::generate_bank(config_for(scenario1(), 20000), 1);
  return jm == 5000 ? small : full;
}

abc::TrialState mid_trial(const abc::TrialConfig& c) {
  abc::TrialState s = abc::TrialState::initial(c);
  s.record_cohort(1, 3, 0, c);
  s.record_cohort(2, 3, 0, c);
  s.record_cohort(3, 3, 1, c);
  s.record_cohort(3, 3, 0, c);
  s.current_dose = 3;
  return s;
}

void BM_GenerateBank(benchmark::State& st) {
  const abc::TrialConfig c = config_for(scenario1(), static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(abc::generate_bank(c, 7));
  st.SetItemsProcessed(st.iterations() * c.bank_size());
}
BENCHMARK(BM_GenerateBank)->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_ComputeWeights(benchmark::State& st) {
  const int jm = static_cast<int>(st.range(0));
  const abc::TrialConfig c = config_for(scenario1(), jm);
  const abc::TrialState s = mid_trial(c);
  abc::RandomStream rng(3);
  for (auto _ : st) benchmark::DoNotOptimize(abc::compute_weights(bank(jm), s, c, rng));
  st.SetItemsProcessed(st.iterations() * c.bank_size());
}
BENCHMARK(BM_ComputeWeights)->Arg(5000)->Arg(20000)->Unit(benchmark::kMicrosecond);

void BM_Estimate(benchmark::State& st) {
  const int jm = static_cast<int>(st.range(0));
  const abc::TrialConfig c = config_for(scenario1(), jm);
  const abc::TrialState s = mid_trial(c);
  abc::RandomStream rng(3);
  const abc::Weights w = abc::compute_weights(bank(jm), s, c, rng);
  for (auto _ : st) benchmark::DoNotOptimize(abc::estimate_toxicity(bank(jm), w, c));
}
BENCHMARK(BM_Estimate)->Arg(5000)->Arg(20000)->Unit(benchmark::kMicrosecond);

void BM_WeightedMedian(benchmark::State& st) {
  abc::RandomStream rng(5);
  std::vector<double> v(static_cast<std::size_t>(st.range(0)));
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = rng.uniform();
    w[i] = rng.uniform();
  }
  for (auto _ : st) benchmark::DoNotOptimize(abc::weighted_median(v, w));
}
BENCHMARK(BM_WeightedMedian)->Arg(1000)->Arg(140000)->Unit(benchmark::kMicrosecond);

void BM_IncompleteBeta(benchmark::State& st) {
  double x = 0.01;
  for (auto _ : st) {
    benchmark::DoNotOptimize(abc::regularized_incomplete_beta(x, 2.5, 17.5));
    x = x > 0.98 ? 0.01 : x + 0.013;
  }
}
BENCHMARK(BM_IncompleteBeta);

void BM_RunTrial(benchmark::State& st) {
  const int jm = static_cast<int>(st.range(0));
  const abc::TrialConfig c = config_for(scenario1(), jm);
  abc::RandomStream rng(11);
  for (auto _ : st) benchmark::DoNotOptimize(abc::run_trial(scenario1(), c, bank(jm), rng));
}
BENCHMARK(BM_RunTrial)->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
