#include "abc/config.hpp"

#include <cmath>
#include <string>

#include "abc/errors.hpp"

namespace abc {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

}  // namespace

void validate(const TrialConfig& c) {
  require(c.num_doses >= 2, "num_doses must be >= 2");
  require(std::isfinite(c.target) && c.target > 0.0 && c.target <= 0.5,
          "target must satisfy 0 < target <= 0.5");
  require(std::isfinite(c.delta) && c.delta >= 0.0, "delta must be >= 0");
  require(c.delta < c.target, "delta must be < target (delta < phi)");
  require(std::isfinite(c.bandwidth) && c.bandwidth > 0.0, "bandwidth must be > 0");
  require(c.samples_per_model >= 1, "samples_per_model must be >= 1");
  require(c.cohort_size >= 1, "cohort_size must be >= 1");
  require(c.max_patients >= c.cohort_size, "max_patients must be >= cohort_size");
  require(c.start_dose >= 1 && c.start_dose <= c.num_doses,
          "start_dose must be in 1..num_doses");
  require(is_probability(c.stop_threshold), "stop_threshold must be a probability");
  if (c.alt_stop_threshold) {
    require(is_probability(*c.alt_stop_threshold), "alt_stop_threshold must be a probability");
  }
}

}  // namespace abc
