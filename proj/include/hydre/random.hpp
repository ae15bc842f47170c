#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hydre {

// FNV-1a; stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Generator for one query's random draws. Depends only on (seed, query id), so
// results do not change with batch order or parallelism.
inline std::mt19937_64 query_rng(std::uint64_t seed, std::string_view query_id) {
  const std::uint64_t h = fnv1a(query_id);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

// Uniform index in [0, n). n must be positive.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace hydre
