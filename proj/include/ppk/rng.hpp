#pragma once

#include <array>
#include <cstdint>

namespace ppk {

/// Philox4x32-10 counter-based generator.
///
/// A stream is identified by (seed, stream id); draw k of the stream is the
/// block cipher of counter (k, stream) under key seed, so replicate r of a
/// batch reads stream r and needs no shared state. Output is fixed by the
/// algorithm, not by the standard library, so sequences are portable.
class Philox {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  /// Raw 10-round bijection.
  static Counter block(Counter ctr, Key key) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1).
  double uniform_open() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; caches the second variate.
  double normal() noexcept;

  /// Poisson variate by sequential inversion; large means are split into
  /// chunks so exp(-mean) stays representable.
  std::int64_t poisson(double mean) noexcept;

 private:
  void refill() noexcept;

  Key key_;
  std::uint64_t block_index_ = 0;
  std::uint64_t stream_;
  Counter buffer_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace ppk
