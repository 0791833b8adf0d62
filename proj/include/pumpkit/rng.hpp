#pragma once

#include <cstdint>
#include <random>

namespace pumpkit::rng {

// splitmix64: used to derive independent per-tube seeds from one master seed
// so that ensemble results do not depend on scheduling order.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic substream seed: hash (master, stream index).
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master ^ (0xA5A5A5A55A5A5A5AULL + index * 0x9E3779B97F4A7C15ULL);
  splitmix64(s);
  return splitmix64(s);
}

inline std::mt19937_64 make_engine(std::uint64_t master, std::uint64_t index) {
  return std::mt19937_64(substream_seed(master, index));
}

}  // namespace pumpkit::rng
