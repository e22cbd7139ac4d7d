#pragma once

#include <cstdint>
#include <limits>

namespace mpspectra {

/// Master seed plus trial index; every random stream is a pure function of the pair.
struct Seed {
  std::uint64_t master = 0;
  std::uint64_t trial = 0;

  friend constexpr bool operator==(const Seed&, const Seed&) = default;
};

/// SplitMix64 finalizer (Stafford variant 13). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// Stream key for a trial: mix64(master + mix64(trial + golden)).
constexpr std::uint64_t stream_key(Seed seed) noexcept {
  return mix64(seed.master + mix64(seed.trial + 0x9e3779b97f4a7c15ULL));
}

/// Counter-based generator: draw i is mix64(key + i * golden), so any position of any
/// stream can be produced without touching other streams.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}
  explicit constexpr CounterRng(Seed seed) noexcept : CounterRng(stream_key(seed)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
  }

  std::uint64_t counter() const noexcept { return counter_; }

  /// Uniform on (0, 1].
  double uniform_open0() noexcept {
    return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by Lemire's multiply-and-reject. bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept;

  /// Standard normal by Box-Muller; the second variate of each pair is kept for the next call.
  double normal() noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mpspectra
