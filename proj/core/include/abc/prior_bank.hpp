#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "abc/config.hpp"
#include "abc/random.hpp"

namespace abc {

// Identifies the design constants a bank was generated for.
struct BankFingerprint {
  int num_doses = 0;
  double target = 0.0;
  double delta = 0.0;
  int samples_per_model = 0;
  std::uint64_t seed = 0;

  bool operator==(const BankFingerprint&) const = default;
};

// One prior draw p_1 <= ... <= p_K together with the model M_k that produced
// it (0 = every dose overly toxic).
struct PriorSample {
  std::vector<double> probs;
  int model_index = 0;
};

// The J = J_m * (K + 1) prior samples, immutable once built.
//
// Besides the row-major J x K probability matrix the bank keeps per-dose
// derived data used by the weighting hot path: the ascending sort order of
// each column (for weighted medians) and log p / log(1 - p) (for binomial
// draws). None of the derived data is persisted.
class PriorBank {
 public:
  PriorBank(BankFingerprint fingerprint, std::vector<double> probs,
            std::vector<std::uint8_t> model_index);

  [[nodiscard]] const BankFingerprint& fingerprint() const { return fingerprint_; }
  [[nodiscard]] int num_doses() const { return fingerprint_.num_doses; }
  [[nodiscard]] std::size_t size() const { return model_index_.size(); }

  // Row j: p_1..p_K of sample j.
  [[nodiscard]] std::span<const double> sample(std::size_t j) const {
    const auto k = static_cast<std::size_t>(num_doses());
    return {probs_.data() + j * k, k};
  }
  [[nodiscard]] int model_of(std::size_t j) const { return model_index_[j]; }
  [[nodiscard]] PriorSample sample_record(std::size_t j) const;

  [[nodiscard]] std::span<const double> probs() const { return probs_; }
  [[nodiscard]] std::span<const std::uint8_t> model_indices() const { return model_index_; }

  // Column views for dose k (0-based).
  [[nodiscard]] std::span<const std::uint32_t> sorted_order(int k) const { return column(order_, k); }
  [[nodiscard]] std::span<const double> sorted_values(int k) const { return column(sorted_, k); }
  [[nodiscard]] std::span<const double> log_p(int k) const { return column(log_p_, k); }
  [[nodiscard]] std::span<const double> log_q(int k) const { return column(log_q_, k); }
  [[nodiscard]] std::span<const double> column_probs(int k) const { return column(col_p_, k); }

  // Throws FingerprintMismatch unless (K, phi, delta) agree with the config.
  void check_matches(const TrialConfig& config) const;

 private:
  template <typename T>
  std::span<const T> column(const std::vector<T>& v, int k) const {
    return {v.data() + static_cast<std::size_t>(k) * size(), size()};
  }

  BankFingerprint fingerprint_;
  std::vector<double> probs_;              // J x K, row-major
  std::vector<std::uint8_t> model_index_;  // J
  // Column-major derived arrays, K x J.
  std::vector<double> col_p_;
  std::vector<std::uint32_t> order_;
  std::vector<double> sorted_;
  std::vector<double> log_p_;
  std::vector<double> log_q_;
};

// Draws J_m samples from each model M_0..M_K. Samples are stored ordered by
// (model index, slot); each block of slots gets its own substream derived
// from `seed`, so the bank is identical for any worker count.
PriorBank generate_bank(const TrialConfig& config, std::uint64_t seed, int workers = 1);

// Fills `out` (size K) with one draw from model M_model.
void draw_prior_sample(int model, int num_doses, double target, double delta, RandomStream& rng,
                       std::span<double> out);

// ---------------------------------------------------------------------------
// Bank file: little-endian, "ABCB" magic, u16 version, then
//   u32 K, f64 phi, f64 delta, u64 J_m, u64 seed, u64 J, u32 CRC-32 of payload,
// followed by the payload: J*K f64 probabilities (row-major) and J u8 model
// indices.

inline constexpr std::uint16_t kBankFormatVersion = 1;

class BankFileError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, Version, Checksum };
  BankFileError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

void save_bank(const PriorBank& bank, const std::filesystem::path& path);
PriorBank load_bank(const std::filesystem::path& path);

// In-memory form of the file; save_bank writes exactly these bytes.
std::vector<std::uint8_t> serialize_bank(const PriorBank& bank);
PriorBank deserialize_bank(std::span<const std::uint8_t> bytes);

}  // namespace abc
