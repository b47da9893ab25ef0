#pragma once

#include <stdexcept>
#include <string>

namespace abc {

// Raised when a TrialConfig (or any other parameter bundle) violates one of
// its invariants. The message names the violated constraint.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Observed counts that break 0 <= y <= m, overfill the trial, or refer to a
// dose outside 1..K.
class CountError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a special function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A prior bank was built for a different (K, phi, delta) than the config in use.
class FingerprintMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every weight is zero (or the weight vector is empty); nothing to estimate from.
class DegenerateWeights : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was requested on a trial whose status forbids it.
class TrialStateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace abc
