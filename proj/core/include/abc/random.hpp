#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace abc {

// SplitMix64 finalizer: a bijective avalanche mix of a 64-bit word.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based substream derivation. The result depends only on the inputs,
// never on how many streams were derived before, so parallel workers can
// derive their own streams in any order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(master, a), b);
}

// A seeded random stream. Uniform and binomial variates are produced by code
// in this class (not std:: distributions) so their sequences are identical
// across standard library implementations.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) : engine_(mix64(seed)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (lo, hi). Endpoint hits are resampled.
  // A zero-width interval returns lo.
  double uniform_open(double lo, double hi) {
    if (!(hi > lo)) return lo;
    for (;;) {
      const double v = lo + (hi - lo) * uniform();
      if (v > lo && v < hi) return v;
    }
  }

  double normal(double mean, double sd) { return mean + sd * std_normal_(engine_); }

  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }

  // Binomial(n, p) by sequential inversion, run from the side of the smaller
  // tail probability so the expected work is n * min(p, 1 - p).
  int binomial(int n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    return binomial(n, p, std::log(p), std::log1p(-p));
  }

  // Same as binomial(n, p) with log(p) and log(1 - p) supplied by the caller.
  int binomial(int n, double p, double log_p, double log_q) {
    if (n <= 0) return 0;
    if (p <= 0.5) return invert(n, p, 1.0 - p, log_q);
    return n - invert(n, 1.0 - p, p, log_p);
  }

 private:
  // Inversion for Binomial(n, p) with log(q) = log(1 - p) precomputed.
  int invert(int n, double p, double q, double log_q) {
    const double s = p / q;
    const double a = (n + 1) * s;
    double r = std::exp(n * log_q);
    double u = uniform();
    int x = 0;
    while (u > r) {
      u -= r;
      ++x;
      if (x > n) return n;  // rounding residue in u
      r *= a / x - s;
    }
    return x;
  }

  std::mt19937_64 engine_;
  std::normal_distribution<double> std_normal_{0.0, 1.0};
};

}  // namespace abc
