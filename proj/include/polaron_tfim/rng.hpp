#pragma once

#include <array>
#include <cstdint>

namespace polaron_tfim {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// Monte Carlo proposals draw their uniform from the counter
/// (site, slice, sweep_lo, sweep_hi) under the key derived from the chain seed,
/// so every random number is a pure function of (seed, site, slice, sweep) and
/// replay does not depend on visitation or thread order.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit constexpr Philox4x32(Key key) noexcept : key_(key) {}
  explicit constexpr Philox4x32(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  constexpr Counter operator()(Counter ctr) const noexcept {
    Key key = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint32_t site, std::uint32_t slice, std::uint64_t sweep) const noexcept {
    const Counter out = (*this)({site, slice, static_cast<std::uint32_t>(sweep), static_cast<std::uint32_t>(sweep >> 32)});
    const std::uint64_t bits = (std::uint64_t{out[0]} << 32 | out[1]) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  constexpr Key key() const noexcept { return key_; }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  Key key_;
};

}  // namespace polaron_tfim
