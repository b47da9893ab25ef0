#include "abc/prior_bank.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "abc/errors.hpp"
#include "abc/parallel.hpp"

namespace abc {

PriorBank::PriorBank(BankFingerprint fingerprint, std::vector<double> probs,
                     std::vector<std::uint8_t> model_index)
    : fingerprint_(fingerprint), probs_(std::move(probs)), model_index_(std::move(model_index)) {
  const auto k_count = static_cast<std::size_t>(fingerprint_.num_doses);
  if (k_count == 0 || probs_.size() != model_index_.size() * k_count) {
    throw std::invalid_argument("PriorBank: probability matrix does not match J x K");
  }
  const std::size_t j_count = model_index_.size();
  if (j_count > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("PriorBank: too many samples");
  }

  col_p_.resize(k_count * j_count);
  order_.resize(k_count * j_count);
  sorted_.resize(k_count * j_count);
  log_p_.resize(k_count * j_count);
  log_q_.resize(k_count * j_count);

  for (std::size_t k = 0; k < k_count; ++k) {
    double* col = col_p_.data() + k * j_count;
    for (std::size_t j = 0; j < j_count; ++j) col[j] = probs_[j * k_count + k];

    std::uint32_t* ord = order_.data() + k * j_count;
    std::iota(ord, ord + j_count, 0U);
    std::sort(ord, ord + j_count, [col](std::uint32_t a, std::uint32_t b) {
      return col[a] < col[b] || (col[a] == col[b] && a < b);
    });

    double* srt = sorted_.data() + k * j_count;
    double* lp = log_p_.data() + k * j_count;
    double* lq = log_q_.data() + k * j_count;
    for (std::size_t i = 0; i < j_count; ++i) {
      srt[i] = col[ord[i]];
      lp[i] = std::log(col[i]);
      lq[i] = std::log1p(-col[i]);
    }
  }
}

PriorSample PriorBank::sample_record(std::size_t j) const {
  const auto row = sample(j);
  return PriorSample{std::vector<double>(row.begin(), row.end()), model_of(j)};
}

void PriorBank::check_matches(const TrialConfig& config) const {
  if (fingerprint_.num_doses != config.num_doses || fingerprint_.target != config.target ||
      fingerprint_.delta != config.delta) {
    std::ostringstream msg;
    msg << "prior bank fingerprint (K=" << fingerprint_.num_doses << ", phi=" << fingerprint_.target
        << ", delta=" << fingerprint_.delta << ") does not match config (K=" << config.num_doses
        << ", phi=" << config.target << ", delta=" << config.delta << ")";
    throw FingerprintMismatch(msg.str());
  }
}

void draw_prior_sample(int model, int num_doses, double target, double delta, RandomStream& rng,
                       std::span<double> out) {
  const double low_hi = target - delta;
  const double high_lo = target + delta;
  const double high_hi = 2.0 * target;
  auto begin = out.begin();
  if (model == 0) {
    for (auto& p : out) p = rng.uniform_open(high_lo, high_hi);
    std::sort(begin, out.end());
    return;
  }
  const auto mtd = static_cast<std::ptrdiff_t>(model - 1);
  for (std::ptrdiff_t i = 0; i < mtd; ++i) begin[i] = rng.uniform_open(0.0, low_hi);
  std::sort(begin, begin + mtd);
  begin[mtd] = rng.uniform_open(low_hi, high_lo);
  for (std::ptrdiff_t i = mtd + 1; i < num_doses; ++i) begin[i] = rng.uniform_open(high_lo, high_hi);
  std::sort(begin + mtd + 1, out.end());
}

namespace {

constexpr std::size_t kSlotsPerBlock = 4096;

}  // namespace

PriorBank generate_bank(const TrialConfig& config, std::uint64_t seed, int workers) {
  validate(config);
  if (config.num_doses > 255) throw ConfigError("num_doses must be <= 255 for a prior bank");

  const int k_count = config.num_doses;
  const auto per_model = static_cast<std::size_t>(config.samples_per_model);
  const std::size_t j_count = per_model * static_cast<std::size_t>(k_count + 1);
  std::vector<double> probs(j_count * static_cast<std::size_t>(k_count));
  std::vector<std::uint8_t> models(j_count);

  const std::size_t blocks_per_model = (per_model + kSlotsPerBlock - 1) / kSlotsPerBlock;
  const std::size_t total_blocks = blocks_per_model * static_cast<std::size_t>(k_count + 1);

  auto fill_block = [&](std::size_t block_id) {
    const auto model = static_cast<int>(block_id / blocks_per_model);
    const std::size_t block = block_id % blocks_per_model;
    RandomStream rng(derive_seed(seed, static_cast<std::uint64_t>(model), block));
    const std::size_t first = block * kSlotsPerBlock;
    const std::size_t last = std::min(per_model, first + kSlotsPerBlock);
    for (std::size_t slot = first; slot < last; ++slot) {
      const std::size_t j = static_cast<std::size_t>(model) * per_model + slot;
      models[j] = static_cast<std::uint8_t>(model);
      draw_prior_sample(model, k_count, config.target, config.delta, rng,
                        std::span<double>(probs.data() + j * static_cast<std::size_t>(k_count),
                                          static_cast<std::size_t>(k_count)));
    }
  };

  parallel_for(total_blocks, workers, fill_block);

  BankFingerprint fp{k_count, config.target, config.delta, config.samples_per_model, seed};
  return PriorBank(fp, std::move(probs), std::move(models));
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr char kMagic[4] = {'A', 'B', 'C', 'B'};
constexpr std::size_t kHeaderSize = 4 + 2 + 4 + 8 + 8 + 8 + 8 + 8 + 4;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t& pos) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1U << 30));
    crc = crc32(crc, bytes.data() + pos, chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> serialize_bank(const PriorBank& bank) {
  const auto& fp = bank.fingerprint();
  if (fp.num_doses > 255) throw ConfigError("num_doses must be <= 255 for a prior bank");

  std::vector<std::uint8_t> payload;
  payload.reserve(bank.probs().size() * 8 + bank.size());
  for (double p : bank.probs()) put_le(payload, p);
  payload.insert(payload.end(), bank.model_indices().begin(), bank.model_indices().end());

  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + payload.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le<std::uint16_t>(out, kBankFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(fp.num_doses));
  put_le<double>(out, fp.target);
  put_le<double>(out, fp.delta);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(fp.samples_per_model));
  put_le<std::uint64_t>(out, fp.seed);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(bank.size()));
  put_le<std::uint32_t>(out, crc_of(payload));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

PriorBank deserialize_bank(std::span<const std::uint8_t> bytes) {
  using Kind = BankFileError::Kind;
  if (bytes.size() < 6 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw BankFileError(Kind::BadMagic, "not a prior bank file (bad magic)");
  }
  std::size_t pos = 4;
  const auto version = get_le<std::uint16_t>(bytes, pos);
  if (version != kBankFormatVersion) {
    throw BankFileError(Kind::Version, "unsupported bank format version " + std::to_string(version));
  }
  if (bytes.size() < kHeaderSize) throw BankFileError(Kind::Checksum, "bank header truncated");

  BankFingerprint fp;
  fp.num_doses = static_cast<int>(get_le<std::uint32_t>(bytes, pos));
  fp.target = get_le<double>(bytes, pos);
  fp.delta = get_le<double>(bytes, pos);
  fp.samples_per_model = static_cast<int>(get_le<std::uint64_t>(bytes, pos));
  fp.seed = get_le<std::uint64_t>(bytes, pos);
  const auto j_count = get_le<std::uint64_t>(bytes, pos);
  const auto crc = get_le<std::uint32_t>(bytes, pos);

  if (fp.num_doses < 1 || fp.num_doses > 255 || fp.samples_per_model < 1 ||
      j_count != static_cast<std::uint64_t>(fp.samples_per_model) * (fp.num_doses + 1)) {
    throw BankFileError(Kind::Checksum, "bank header is inconsistent (J != J_m * (K + 1))");
  }
  const std::size_t k_count = static_cast<std::size_t>(fp.num_doses);
  const std::size_t payload_size = j_count * k_count * 8 + j_count;
  if (bytes.size() - kHeaderSize != payload_size) {
    throw BankFileError(Kind::Checksum, "bank payload truncated or oversized (checksum cannot match)");
  }
  const auto payload = bytes.subspan(kHeaderSize);
  if (crc_of(payload) != crc) throw BankFileError(Kind::Checksum, "bank payload checksum mismatch");

  std::vector<double> probs(j_count * k_count);
  std::size_t ppos = 0;
  for (auto& p : probs) p = get_le<double>(payload, ppos);
  std::vector<std::uint8_t> models(payload.begin() + static_cast<std::ptrdiff_t>(ppos), payload.end());
  return PriorBank(fp, std::move(probs), std::move(models));
}

void save_bank(const PriorBank& bank, const std::filesystem::path& path) {
  const auto bytes = serialize_bank(bank);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw BankFileError(BankFileError::Kind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw BankFileError(BankFileError::Kind::Io, "failed writing " + path.string());
}

PriorBank load_bank(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BankFileError(BankFileError::Kind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw BankFileError(BankFileError::Kind::Io, "failed reading " + path.string());
  return deserialize_bank(bytes);
}

}  // namespace abc
