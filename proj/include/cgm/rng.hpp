#pragma once

#include <cstdint>

namespace cgm {

// Counter-based random streams (Philox4x32-10). Every draw is a pure function
// of (seed, counter), so lattice cells, boundary edges and queue rows can be
// sampled in any order, in parallel, or re-sampled after a window grows, and
// the values never change. The counter layout used throughout:
//
//   c = (x, y, tag, extra)   key = (seed lo, seed hi)
//
// with (x,y) the absolute lattice coordinate (or sequence index), `tag` a
// stream discriminator (see StreamTag) and `extra` a per-cell draw index.
namespace rng {

namespace detail {

inline void philox_round(std::uint32_t c[4], const std::uint32_t k[2]) {
  constexpr std::uint32_t M0 = 0xD2511F53u;
  constexpr std::uint32_t M1 = 0xCD9E8D57u;
  const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  c[0] = hi1 ^ c[1] ^ k[0];
  c[1] = lo1;
  c[2] = hi0 ^ c[3] ^ k[1];
  c[3] = lo0;
}

}  // namespace detail

struct Block {
  std::uint32_t v[4];
  std::uint64_t u64(int half) const {
    return static_cast<std::uint64_t>(v[2 * half]) | (static_cast<std::uint64_t>(v[2 * half + 1]) << 32);
  }
};

inline Block philox4x32(std::uint64_t seed, std::uint32_t c0, std::uint32_t c1, std::uint32_t c2,
                        std::uint32_t c3) {
  constexpr std::uint32_t W0 = 0x9E3779B9u;
  constexpr std::uint32_t W1 = 0xBB67AE85u;
  std::uint32_t c[4] = {c0, c1, c2, c3};
  std::uint32_t k[2] = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (int r = 0; r < 10; ++r) {
    detail::philox_round(c, k);
    k[0] += W0;
    k[1] += W1;
  }
  return Block{{c[0], c[1], c[2], c[3]}};
}

enum class StreamTag : std::uint32_t {
  weights = 0,
  boundary_h = 1,
  boundary_v = 2,
  arrivals = 3,
  service = 4,
  misc = 5,
};

// 64 uniform bits for counter (x, y, tag, extra).
inline std::uint64_t bits(std::uint64_t seed, std::int64_t x, std::int64_t y, StreamTag tag,
                          std::uint32_t extra = 0) {
  return philox4x32(seed, static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y),
                    static_cast<std::uint32_t>(tag), extra)
      .u64(0);
}

// Uniform in [0,1) with 53 random bits.
inline double uniform01(std::uint64_t seed, std::int64_t x, std::int64_t y, StreamTag tag,
                        std::uint32_t extra = 0) {
  return static_cast<double>(bits(seed, x, y, tag, extra) >> 11) * 0x1.0p-53;
}

// Derived sub-seed for replicate r (or any sub-stream index). splitmix64 finalizer.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t r) {
  std::uint64_t z = seed + (r + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace rng
}  // namespace cgm
