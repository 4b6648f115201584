#pragma once

#include <cstdint>
#include <random>

namespace groupcal {

/// SplitMix64 finalizer. Used to derive independent sub-streams from one root seed.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) noexcept {
  return mix64(mix64(root) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

// Stream tags for derive_seed; keep stable, reports depend on them.
namespace streams {
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kPartition = 2;
inline constexpr std::uint64_t kAuditSplit = 3;
inline constexpr std::uint64_t kSynth = 4;
inline constexpr std::uint64_t kAuditSample = 5;
}  // namespace streams

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t root, std::uint64_t stream) { return Rng(derive_seed(root, stream)); }

/// Uniform double in [0, 1) with 53 random bits; independent of <random> distribution internals.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace groupcal
