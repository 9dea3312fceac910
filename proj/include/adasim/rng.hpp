#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace adasim {

using Rng = std::mt19937_64;

// splitmix64 finalizer, used to decorrelate derived seeds.
inline uint64_t mix_bits(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic sub-stream seed for a named consumer. Different tags (or
// indices) yield independent streams from one base seed.
inline uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index = 0) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix_bits(base ^ mix_bits(h + index));
}

inline Rng make_rng(uint64_t base, std::string_view tag, uint64_t index = 0) {
  return Rng(derive_seed(base, tag, index));
}

}  // namespace adasim
