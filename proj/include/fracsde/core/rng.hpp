#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace fracsde::rng {

// Philox4x32-10 block cipher (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter encrypt(Counter ctr, Key key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{M0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{M1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += W0;
      key[1] += W1;
    }
    return ctr;
  }
};

inline double to_unit_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

// A reproducible stream addressed by (seed, path, stream). Values depend only on
// the address and the draw index, never on how paths are grouped into batches.
class Substream {
 public:
  Substream(std::uint64_t seed, std::uint64_t path, std::uint32_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        path_(path),
        stream_(stream) {}

  double uniform() {
    if (ubuf_left_ == 0) refill_uniform();
    return ubuf_[2 - ubuf_left_--];
  }

  double normal() {
    if (nbuf_left_ == 0) {
      const double u1 = uniform();
      const double u2 = uniform();
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double a = 2.0 * std::numbers::pi * u2;
      nbuf_[0] = r * std::cos(a);
      nbuf_[1] = r * std::sin(a);
      nbuf_left_ = 2;
    }
    return nbuf_[2 - nbuf_left_--];
  }

 private:
  void refill_uniform() {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                  static_cast<std::uint32_t>(path_),
                                  static_cast<std::uint32_t>(path_ >> 32) ^ (stream_ * 0x85EBCA6Bu)};
    const auto out = Philox4x32::encrypt(ctr, key_);
    ubuf_[0] = to_unit_open(out[0], out[1]);
    ubuf_[1] = to_unit_open(out[2], out[3]);
    ubuf_left_ = 2;
    ++block_;
  }

  Philox4x32::Key key_;
  std::uint64_t path_;
  std::uint32_t stream_;
  std::uint64_t block_ = 0;
  std::array<double, 2> ubuf_{};
  std::array<double, 2> nbuf_{};
  int ubuf_left_ = 0;
  int nbuf_left_ = 0;
};

// Stream tags keep independent uses of the same (seed, path) apart.
namespace tag {
inline constexpr std::uint32_t noise = 0x100;
inline constexpr std::uint32_t aux = 0x200;
inline constexpr std::uint32_t mc = 0x300;
inline constexpr std::uint32_t subcell = 0x400;
}  // namespace tag

}  // namespace fracsde::rng
