#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace qsync {

using RngStream = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Labels for independent random streams inside one run.
enum class StreamPurpose : std::uint64_t {
  counts = 1,
  pairs = 2,
  detectors = 3,
  pump_phase = 4,
  drift = 5,
  servo_noise = 6,
  timing = 7,
};

/// Deterministic stream keyed by (seed, ids...). Distinct id tuples give
/// statistically independent streams; equal tuples give identical ones.
inline RngStream make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = splitmix64(seed);
  for (auto id : ids) h = splitmix64(h ^ splitmix64(id + 0x632be59bd9b4e019ULL));
  return RngStream{h};
}

inline RngStream make_stream(std::uint64_t seed, StreamPurpose purpose,
                             std::uint64_t index = 0, std::uint64_t sub = 0) {
  return make_stream(seed, {static_cast<std::uint64_t>(purpose), index, sub});
}

}  // namespace qsync
