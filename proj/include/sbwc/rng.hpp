#pragma once

// All randomness derives from one top-level seed. Each consumer asks for a
// named sub-stream, seeded by hash(top_seed, purpose, index), so adding a new
// consumer or sweep point never shifts an existing stream.

#include <cstdint>
#include <random>
#include <string_view>

namespace sbwc {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t top_seed,
                                    std::string_view purpose,
                                    std::uint64_t index = 0) {
  return splitmix64(splitmix64(top_seed ^ fnv1a(purpose)) + index);
}

inline Rng make_rng(std::uint64_t top_seed, std::string_view purpose,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(top_seed, purpose, index));
}

}  // namespace sbwc
