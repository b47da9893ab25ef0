#include "abc/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "abc/special_functions.hpp"

namespace abc {

int true_mtd_index(const std::vector<double>& probs, double target) {
  if (probs.empty()) return 0;
  if (probs.front() > target + kUnacceptableMargin) return 0;
  int best = 1;
  for (std::size_t k = 1; k < probs.size(); ++k) {
    if (std::fabs(probs[k] - target) < std::fabs(probs[static_cast<std::size_t>(best - 1)] - target)) {
      best = static_cast<int>(k) + 1;
    }
  }
  return best;
}

void validate(const Scenario& s) {
  if (s.true_probs.empty()) throw std::invalid_argument("scenario " + s.label + ": no doses");
  if (!(s.target > 0.0 && s.target < 1.0)) {
    throw std::invalid_argument("scenario " + s.label + ": target must be in (0, 1)");
  }
  for (std::size_t k = 0; k < s.true_probs.size(); ++k) {
    const double p = s.true_probs[k];
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument("scenario " + s.label + ": probabilities must be in (0, 1)");
    }
    if (k > 0 && !(p > s.true_probs[k - 1])) {
      throw std::invalid_argument("scenario " + s.label + ": probabilities must be strictly increasing");
    }
  }
  if (s.mtd_index < 0 || s.mtd_index > s.num_doses()) {
    throw std::invalid_argument("scenario " + s.label + ": mtd_index out of range");
  }
  if (s.mtd_index >= 1 && s.mtd_index != true_mtd_index(s.true_probs, s.target)) {
    throw std::invalid_argument("scenario " + s.label + ": mtd_index is not the dose closest to target");
  }
}

const std::vector<Scenario>& fixed_scenarios() {
  static const std::vector<Scenario> scenarios = {
      {{0.05, 0.10, 0.20, 0.30, 0.50, 0.70}, 0.20, "fixed:1", 3},
      {{0.30, 0.40, 0.52, 0.61, 0.76, 0.87}, 0.20, "fixed:2", 0},
      {{0.05, 0.06, 0.08, 0.11, 0.19, 0.34}, 0.20, "fixed:3", 5},
      {{0.06, 0.08, 0.12, 0.18, 0.40, 0.71}, 0.20, "fixed:4", 4},
      {{0.001, 0.002, 0.03, 0.05, 0.11, 0.22}, 0.20, "fixed:5", 6},
      {{0.125, 0.400, 0.667}, 0.25, "real", 1},
  };
  return scenarios;
}

std::optional<Scenario> find_fixed_scenario(std::string_view label) {
  for (const auto& s : fixed_scenarios()) {
    if (s.label == label) return s;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

void ScenarioGenSpec::validate() const {
  if (num_doses < 1) throw std::invalid_argument("scenario generator: num_doses must be >= 1");
  if (!(target > 0.0 && target <= 0.5)) {
    throw std::invalid_argument("scenario generator: target must be in (0, 0.5]");
  }
  if (!(sigma0 > 0.0 && sigma1 > 0.0 && sigma2 > 0.0)) {
    throw std::invalid_argument("scenario generator: sigmas must be > 0");
  }
  if (!std::isfinite(mu)) throw std::invalid_argument("scenario generator: mu must be finite");
  if (delta_target && !(*delta_target > 0.0 && *delta_target < target)) {
    throw std::invalid_argument("scenario generator: Delta must be in (0, target)");
  }
}

namespace {

constexpr double kProbFloor = 1e-12;

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

}  // namespace

Scenario generate_random_scenario(const ScenarioGenSpec& spec, RandomStream& rng) {
  spec.validate();
  const int k_count = spec.num_doses;
  const double z_target = normal_quantile(spec.target);
  const double two_phi = 2.0 * spec.target;

  // uniform() < 1, so the index is always in range.
  const int mtd = static_cast<int>(rng.uniform() * k_count);
  std::vector<double> p(static_cast<std::size_t>(k_count));
  const auto at = [&](int k) -> double& { return p[static_cast<std::size_t>(k)]; };

  at(mtd) = clamp_prob(normal_cdf(rng.normal(z_target, spec.sigma0)));

  for (int k = mtd; k > 0; --k) {
    double z = normal_quantile(at(k));
    if (z > z_target) z = normal_quantile(clamp_prob(two_phi - at(k)));
    const double eps = rng.normal(spec.mu, spec.sigma1);
    at(k - 1) = clamp_prob(normal_cdf(z - eps * eps));
  }
  for (int k = mtd; k + 1 < k_count; ++k) {
    double z = normal_quantile(at(k));
    if (z < z_target) z = normal_quantile(clamp_prob(two_phi - at(k)));
    const double eps = rng.normal(spec.mu, spec.sigma2);
    at(k + 1) = clamp_prob(normal_cdf(z + eps * eps));
  }

  // Break clamp-induced ties away from the MTD.
  for (int k = mtd + 1; k < k_count; ++k) {
    if (!(at(k) > at(k - 1))) at(k) = std::nextafter(at(k - 1), 1.0);
  }
  for (int k = mtd - 1; k >= 0; --k) {
    if (!(at(k) < at(k + 1))) at(k) = std::nextafter(at(k + 1), 0.0);
  }

  Scenario s;
  s.true_probs = std::move(p);
  s.target = spec.target;
  s.label = "random";
  s.mtd_index = mtd + 1;
  return s;
}

double neighbor_gap(const Scenario& s) {
  if (s.mtd_index < 1 || s.num_doses() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto k = static_cast<std::size_t>(s.mtd_index - 1);
  double sum = 0.0;
  int n = 0;
  if (k + 1 < s.true_probs.size()) {
    sum += s.true_probs[k + 1] - s.true_probs[k];
    ++n;
  }
  if (k > 0) {
    sum += s.true_probs[k] - s.true_probs[k - 1];
    ++n;
  }
  return sum / n;
}

double measure_delta(const ScenarioGenSpec& spec, int draws, std::uint64_t seed) {
  if (draws < 1) throw std::invalid_argument("measure_delta: draws must be >= 1");
  if (spec.num_doses < 2) throw std::invalid_argument("measure_delta: needs at least two doses");
  RandomStream rng(seed);
  double sum = 0.0;
  for (int i = 0; i < draws; ++i) sum += neighbor_gap(generate_random_scenario(spec, rng));
  return sum / draws;
}

double calibrate_mu(const ScenarioGenSpec& spec, double target_delta, std::uint64_t seed,
                    const CalibrationOptions& opt) {
  ScenarioGenSpec work = spec;
  const auto delta_at = [&](double mu) {
    work.mu = mu;
    return measure_delta(work, opt.draws, seed);
  };

  double lo = opt.mu_low;
  double hi = opt.mu_high;
  const double f_lo = delta_at(lo);
  const double f_hi = delta_at(hi);
  if (std::fabs(f_lo - target_delta) <= opt.tolerance && target_delta <= f_lo) return lo;
  if (target_delta < f_lo || target_delta > f_hi) {
    std::ostringstream msg;
    msg << "Delta=" << target_delta << " is outside the reachable range [" << f_lo << ", " << f_hi
        << "] for mu in [" << opt.mu_low << ", " << opt.mu_high << "]";
    throw UnreachableTarget(msg.str());
  }

  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < opt.max_iterations; ++it) {
    mid = 0.5 * (lo + hi);
    const double f_mid = delta_at(mid);
    if (f_mid < target_delta) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-7) break;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view field, int line_no) {
  field = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw std::invalid_argument("scenario line " + std::to_string(line_no) + ": bad number '" +
                                std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::vector<Scenario> read_scenarios(std::istream& in) {
  std::vector<Scenario> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
      const auto comma = body.find(',', start);
      fields.push_back(body.substr(start, comma == std::string_view::npos ? body.npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() < 3) {
      throw std::invalid_argument("scenario line " + std::to_string(line_no) +
                                  ": expected label, phi, p1, ..., pK");
    }
    Scenario s;
    s.label = std::string(trim(fields[0]));
    s.target = parse_double(fields[1], line_no);
    for (std::size_t i = 2; i < fields.size(); ++i) s.true_probs.push_back(parse_double(fields[i], line_no));
    s.mtd_index = true_mtd_index(s.true_probs, s.target);
    validate(s);
    out.push_back(std::move(s));
  }
  return out;
}

std::string format_scenario_line(const Scenario& s) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << s.label << ", " << s.target;
  for (double p : s.true_probs) os << ", " << p;
  return os.str();
}

void write_scenarios(std::ostream& out, const std::vector<Scenario>& scenarios) {
  for (const auto& s : scenarios) out << format_scenario_line(s) << '\n';
}

}  // namespace abc
