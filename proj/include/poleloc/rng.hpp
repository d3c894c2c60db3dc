#pragma once

#include <cstdint>
#include <random>

namespace poleloc {

// Named RNG streams. Every random draw in the toolkit derives its engine
// from (seed, stream, step, index), so results do not depend on call order
// or on how work is split across threads.
enum class RngStream : std::uint64_t {
  world = 1,
  trajectory = 2,
  scan = 3,
  odometry = 4,
  drop = 5,
  filter_init = 6,
  predict = 7,
  resample = 8,
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

inline std::uint64_t mix_stream(std::uint64_t seed, RngStream stream,
                                std::uint64_t step, std::uint64_t index) {
  std::uint64_t h = detail::splitmix64(seed);
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(stream));
  h = detail::splitmix64(h ^ step);
  h = detail::splitmix64(h ^ index);
  return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed, RngStream stream,
                                std::uint64_t step = 0,
                                std::uint64_t index = 0) {
  return std::mt19937_64(mix_stream(seed, stream, step, index));
}

}  // namespace poleloc
