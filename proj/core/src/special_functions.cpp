#include "abc/special_functions.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "abc/errors.hpp"

namespace abc {

namespace {

constexpr int kMaxIterations = 300;
constexpr double kConvergence = 1e-12;
constexpr double kTiny = 1e-300;

// Continued fraction for I_x(a, b) (without the prefactor), modified Lentz.
double beta_continued_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;

  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;

  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;

    // even step
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;

    // odd step
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;

    if (std::fabs(del - 1.0) < kConvergence) return h;
  }
  throw DomainError("regularized_incomplete_beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("regularized_incomplete_beta: x must be in [0, 1]");
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("regularized_incomplete_beta: a must be > 0");
  if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("regularized_incomplete_beta: b must be > 0");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);

  double result;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    result = front * beta_continued_fraction(x, a, b) / a;
  } else {
    result = 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
  }
  if (result < 0.0) return 0.0;
  if (result > 1.0) return 1.0;
  return result;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must be in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace abc
