#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "abc/random.hpp"

namespace abc {

// A true dose-toxicity curve. mtd_index is 1-based; 0 means no acceptable dose.
struct Scenario {
  std::vector<double> true_probs;
  double target = 0.0;
  std::string label;
  int mtd_index = 0;

  [[nodiscard]] int num_doses() const { return static_cast<int>(true_probs.size()); }
  bool operator==(const Scenario&) const = default;
};

// A curve has no acceptable dose when even the lowest dose exceeds the target
// by more than this margin.
inline constexpr double kUnacceptableMargin = 0.05;

// argmin_k |p_k - phi| (lower dose on ties), or 0 when p_1 > phi + margin.
int true_mtd_index(const std::vector<double>& probs, double target);

// Throws std::invalid_argument unless probabilities are in (0,1), strictly
// increasing, and mtd_index is consistent with true_mtd_index.
void validate(const Scenario& scenario);

// The five six-dose benchmark curves at phi = 0.20 (labels fixed:1..fixed:5)
// followed by the three-dose real-trial curve at phi = 0.25 (label real).
// Scenario 5's two leading zero probabilities are represented as 0.001 and
// 0.002 so the curve stays strictly increasing.
const std::vector<Scenario>& fixed_scenarios();

// Lookup by label ("fixed:3", "real").
std::optional<Scenario> find_fixed_scenario(std::string_view label);

// ---------------------------------------------------------------------------
// Random scenarios (probit-scale random walk away from a random MTD).

struct ScenarioGenSpec {
  int num_doses = 5;
  double target = 0.30;
  double sigma0 = 0.05;
  double sigma1 = 0.35;
  double sigma2 = 0.35;
  double mu = 0.0;  // shared mean of the lower and upper step noise
  std::optional<double> delta_target;

  void validate() const;
};

// Probabilities are kept in [1e-12, 1 - 1e-12]; ties produced by that clamp
// are broken by the smallest representable step so the curve stays strictly
// increasing.
Scenario generate_random_scenario(const ScenarioGenSpec& spec, RandomStream& rng);

// Mean of the available neighbor gaps p_{mtd+1} - p_mtd and p_mtd - p_{mtd-1}.
// NaN for single-dose curves or curves without an MTD.
double neighbor_gap(const Scenario& scenario);

// Monte Carlo estimate of E[neighbor_gap] at spec.mu.
double measure_delta(const ScenarioGenSpec& spec, int draws, std::uint64_t seed);

struct CalibrationOptions {
  int draws = 20000;
  int max_iterations = 40;
  double mu_low = 0.0;
  double mu_high = 3.0;
  double tolerance = 0.005;
};

class UnreachableTarget : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bisection on mu so that measure_delta(mu) hits `target_delta`. Every
// evaluation reuses the same seed, so the estimated curve is a smooth
// function of mu. Throws UnreachableTarget when the target lies outside
// [Delta(mu_low) - tolerance, Delta(mu_high) + tolerance].
double calibrate_mu(const ScenarioGenSpec& spec, double target_delta, std::uint64_t seed,
                    const CalibrationOptions& options = {});

// ---------------------------------------------------------------------------
// Text format: one scenario per line, `label, phi, p1, p2, ..., pK`.
// Blank lines and lines starting with '#' are ignored.

std::vector<Scenario> read_scenarios(std::istream& in);
void write_scenarios(std::ostream& out, const std::vector<Scenario>& scenarios);
std::string format_scenario_line(const Scenario& scenario);

}  // namespace abc
