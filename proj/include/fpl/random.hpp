#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (key, stream, index), so any run can be replayed from its seed and any
// sample budget can be split across workers without changing the result.

#include <array>
#include <cstddef>
#include <cstdint>

namespace fpl::random {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
Counter philox4x32(Counter counter, Key key) noexcept;

/// SplitMix64 finalizer; used to derive independent keys from a user seed.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Purpose tags keep the streams used by different components disjoint.
enum class Domain : std::uint64_t {
  perturbation = 0x70657274,
  meta_perturbation = 0x6d657461,
  monte_carlo = 0x6d636d63,
  environment = 0x656e7669,
  subclass = 0x7375626b,
};

std::uint64_t derive_seed(std::uint64_t seed, Domain domain, std::uint64_t salt = 0) noexcept;

/// Uniform double in [0, 1) with 53 random bits.
double to_unit(std::uint64_t bits) noexcept;

/// Random access into a 2-D array of uniforms: one row per stream
/// (time step or Monte-Carlo sample), one column per coordinate.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) noexcept;

  double uniform(std::uint64_t stream, std::uint64_t index) const noexcept;

  /// Fills out[0..count) with the uniforms of one stream row.
  template <typename Out>
  void fill(std::uint64_t stream, std::size_t count, Out&& out) const noexcept {
    for (std::size_t block = 0; 2 * block < count; ++block) {
      const Counter c = philox4x32(
          {static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
           static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)},
          key_);
      const std::uint64_t lo = (std::uint64_t{c[1]} << 32) | c[0];
      out(2 * block, to_unit(lo));
      if (2 * block + 1 < count) {
        const std::uint64_t hi = (std::uint64_t{c[3]} << 32) | c[2];
        out(2 * block + 1, to_unit(hi));
      }
    }
  }

 private:
  Key key_;
};

/// Inverse-CDF transform of the standard exponential: -ln(1 - u).
double exponential_from_uniform(double u) noexcept;

}  // namespace fpl::random
