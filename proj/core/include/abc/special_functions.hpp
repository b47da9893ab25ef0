#pragma once

namespace abc {

// Regularized incomplete beta function I_x(a, b).
//
// Evaluated with the modified Lentz continued fraction, switching to the
// complementary form 1 - I_{1-x}(b, a) when x > (a + 1) / (a + b + 2) so the
// fraction converges quickly. Throws DomainError for x outside [0, 1] or
// non-positive (or non-finite) a, b.
double regularized_incomplete_beta(double x, double a, double b);

// Standard normal CDF.
double normal_cdf(double z);

// Standard normal quantile; p must lie in (0, 1).
double normal_quantile(double p);

}  // namespace abc
