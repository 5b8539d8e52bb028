// SPDX-License-Identifier: MIT
//
// Counter-based deterministic random streams (splitmix64). Every consumer
// derives its own stream from (seed, tag); the i-th draw of a stream depends
// only on the stream key and i, never on other streams or on batching. This
// keeps whole runs byte-reproducible and lets callers index draws explicitly,
// e.g. one substream per path or per step.
#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace meshvmc {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over the tag, folded into the seed. Named substreams.
inline std::uint64_t derive_stream(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(seed ^ h);
}

inline std::uint64_t derive_stream(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
  return mix64(derive_stream(seed, tag) + kGolden * (index + 1));
}

// Stateless draw: value i of the stream with the given key.
inline std::uint64_t draw_u64(std::uint64_t key, std::uint64_t i) {
  return mix64(key + kGolden * (i + 1));
}

// Uniform in [0, 1), 53 mantissa bits.
inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double draw_unit(std::uint64_t key, std::uint64_t i) { return to_unit(draw_u64(key, i)); }

class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return draw_u64(key_, ctr_++); }
  double next_unit() { return to_unit(next_u64()); }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t ctr_ = 0;
};

// Box-Muller pair from two explicit uniforms. u1 is nudged away from zero so
// the log stays finite.
inline void normal_pair(double u1, double u2, double& z0, double& z1) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  const double r = std::sqrt(-2.0 * std::log(u1 > 0x1.0p-100 ? u1 : 0x1.0p-100));
  z0 = r * std::cos(kTwoPi * u2);
  z1 = r * std::sin(kTwoPi * u2);
}

// Standard normal draw i of a keyed stream; draws 2j and 2j+1 share one
// Box-Muller pair built from uniforms 2j and 2j+1.
inline double draw_normal(std::uint64_t key, std::uint64_t i) {
  const std::uint64_t j = i / 2;
  double z0 = 0.0, z1 = 0.0;
  normal_pair(draw_unit(key, 2 * j), draw_unit(key, 2 * j + 1), z0, z1);
  return (i % 2 == 0) ? z0 : z1;
}

}  // namespace meshvmc
