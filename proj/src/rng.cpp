#include "ppk/rng.hpp"

#include <cmath>
#include <numbers>

namespace ppk {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

constexpr double kPoissonChunk = 500.0;

}  // namespace

Philox::Counter Philox::block(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

Philox::Philox(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

void Philox::refill() noexcept {
  const Counter ctr{static_cast<std::uint32_t>(block_index_),
                    static_cast<std::uint32_t>(block_index_ >> 32),
                    static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  buffer_ = block(ctr, key_);
  ++block_index_;
  used_ = 0;
}

std::uint32_t Philox::next_u32() noexcept {
  if (used_ == 4) refill();
  return buffer_[used_++];
}

std::uint64_t Philox::next_u64() noexcept {
  const std::uint64_t hi = next_u32();
  const std::uint64_t lo = next_u32();
  return (hi << 32) | lo;
}

double Philox::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Philox::uniform_open() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Philox::normal() noexcept {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  const double u1 = uniform_open();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  has_spare_normal_ = true;
  return r * std::cos(theta);
}

std::int64_t Philox::poisson(double mean) noexcept {
  if (!(mean > 0.0)) return 0;
  std::int64_t total = 0;
  double remaining = mean;
  while (remaining > 0.0) {
    const double m = std::min(remaining, kPoissonChunk);
    remaining -= m;
    double p = std::exp(-m);
    double cdf = p;
    const double u = uniform();
    std::int64_t k = 0;
    // The cap guards against u landing above the rounded total mass.
    while (u > cdf && k < 100000) {
      ++k;
      p *= m / static_cast<double>(k);
      cdf += p;
      if (p == 0.0 && k > m) break;
    }
    total += k;
  }
  return total;
}

}  // namespace ppk
