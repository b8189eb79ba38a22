#pragma once

#include <cstdint>
#include <random>

namespace lkconf {

// SplitMix64 output function (Steele, Lea, Flood 2014).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Deterministic substream derivation used everywhere a seed is split:
//
//   derived = splitmix64(base + GOLDEN * (stream + 1))
//
// with GOLDEN = 0x9E3779B97F4A7C15. Trial seeds are derive_seed(base_seed,
// trial_index); within a trial, named stream ids are mixed the same way.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base + 0x9E3779B97F4A7C15ULL * (stream + 1));
}

// Named stream ids. Values are part of the reproducibility contract.
// Trial seeds live at kTrialBase + trial_index, away from the fixed ids.
namespace streams {
inline constexpr std::uint64_t kTrainData = 0x100;
inline constexpr std::uint64_t kGammaShuffle = 0x101;
inline constexpr std::uint64_t kGammaMin = 0x102;
inline constexpr std::uint64_t kPool = 0x103;
inline constexpr std::uint64_t kTrialBase = 0x10000;
// per-trial streams
inline constexpr std::uint64_t kCalibration = 1;
inline constexpr std::uint64_t kPairShuffle = 2;
inline constexpr std::uint64_t kTestPoint = 3;
inline constexpr std::uint64_t kMonteCarlo = 4;
// function draws: kFunctions + 8 * bandwidth_index + group_size
inline constexpr std::uint64_t kFunctions = 64;
}  // namespace streams

inline std::mt19937_64 make_engine(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace lkconf
