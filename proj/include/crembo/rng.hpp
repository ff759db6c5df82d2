#pragma once

#include <cstdint>
#include <random>

namespace crembo {

/// SplitMix64 finalizer (Steele, Lea & Flood). Used as the mixing step of
/// every seed derivation in the project.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Sub-seed fan-out. A master seed and a (stream, index) pair map to a
/// sub-seed as
///
///   derive_seed(m, s, i) = splitmix64(splitmix64(m ^ splitmix64(s)) + i)
///
/// Streams name independent consumers (forest trees, CV repeats, folds, ...),
/// so a partial re-run of one job reproduces the same numbers as a full run.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(master ^ splitmix64(stream)) + index);
}

namespace stream {
inline constexpr std::uint64_t kForestTree = 1;
inline constexpr std::uint64_t kRepeat = 2;
inline constexpr std::uint64_t kFold = 3;
inline constexpr std::uint64_t kValidationSplit = 4;
inline constexpr std::uint64_t kForest = 5;
inline constexpr std::uint64_t kTestSplit = 6;
inline constexpr std::uint64_t kRound = 7;
inline constexpr std::uint64_t kPerturbation = 8;
inline constexpr std::uint64_t kSynthetic = 9;
} // namespace stream

using Rng = std::mt19937_64;

} // namespace crembo
