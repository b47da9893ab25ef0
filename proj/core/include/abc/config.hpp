#pragma once

#include <cstdint>
#include <optional>

namespace abc {

// Design constants for one ABC dose-finding trial. Dose levels are 1-based
// throughout the public API (1..num_doses).
struct TrialConfig {
  int num_doses = 3;
  double target = 0.25;      // phi, target DLT rate
  double delta = 0.1;        // half-width of the target neighborhood in the prior
  double bandwidth = 0.01;   // kernel bandwidth h
  int samples_per_model = 20000;
  int cohort_size = 3;
  int max_patients = 36;
  int start_dose = 1;
  double stop_threshold = 0.95;
  // Weighted-bank stopping rule; disabled unless set.
  std::optional<double> alt_stop_threshold;
  // Restrict the argmin over doses to those with at least one patient.
  bool restrict_to_tried = false;

  // Total prior bank size J = J_m * (K + 1).
  [[nodiscard]] std::int64_t bank_size() const {
    return static_cast<std::int64_t>(samples_per_model) * (num_doses + 1);
  }
};

// Default threshold for the weighted-bank stopping rule when it is enabled
// without an explicit value.
inline constexpr double kDefaultAltStopThreshold = 0.9;

// Throws ConfigError naming the first violated constraint.
void validate(const TrialConfig& config);

}  // namespace abc
