#pragma once

#include <array>
#include <cstdint>

namespace loolab {

/// Philox4x32-10 counter-based generator.
///
/// The output is a pure function of (key, stream, counter), so any draw can be
/// addressed directly and independent streams never share state. This is what
/// makes bootstrap replicates and experiment replications reproducible across
/// platforms and thread counts.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(seed), stream_(stream) {}

  std::uint64_t seed() const noexcept { return key_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// A generator on an independent stream derived from this one.
  CounterRng split(std::uint64_t id) const noexcept;

  /// Raw 128-bit block at an arbitrary counter position.
  std::array<std::uint32_t, 4> block(std::uint64_t counter) const noexcept;

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1].
  double uniform_pos() noexcept { return 1.0 - uniform(); }
  double exponential() noexcept;
  double normal() noexcept;
  /// Gamma(shape, 1) by Marsaglia-Tsang; shape > 0.
  double gamma(double shape) noexcept;
  double beta(double a, double b) noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
};

/// SplitMix64 finalizer; used to derive well-mixed child seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Deterministically combine a seed with a list of integer tags.
template <typename... Tags>
std::uint64_t derive_seed(std::uint64_t seed, Tags... tags) noexcept {
  std::uint64_t h = mix64(seed);
  ((h = mix64(h ^ (static_cast<std::uint64_t>(tags) + 0x9e3779b97f4a7c15ULL))), ...);
  return h;
}

/// Uniform draw in [0, 1) addressed by (seed, index); element i of a simulated
/// sequence depends only on i, so shorter sequences are prefixes of longer ones.
double uniform_at(std::uint64_t seed, std::uint64_t index) noexcept;
/// Standard normal draw addressed by (seed, index), Box-Muller on one block.
double normal_at(std::uint64_t seed, std::uint64_t index) noexcept;

}  // namespace loolab
