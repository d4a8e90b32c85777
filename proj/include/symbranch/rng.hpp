#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace symbranch {

using Rng = std::mt19937_64;

/// Subsystem tags. Streams with different tags never coincide for a given seed.
enum class StreamTag : std::uint64_t {
  kExitLaw = 0x11,
  kBrownianOracle = 0x12,
  kJumpMeasure = 0x13,
  kSbmFinite = 0x21,
  kNonspatial = 0x22,
  kTrotter = 0x31,
  kPdmp = 0x32,
  kMomentDual = 0x41,
  kCoalescingDual = 0x42,
  kVoter = 0x51,
  kHarness = 0x61,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based stream derivation: the engine for replica `index` depends only
/// on (seed, tag, salt, index), never on scheduling or on other replicas.
Rng make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index,
                std::uint64_t salt = 0);

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>{}(rng);
}

// Uniform on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  constexpr double kScale = 0x1.0p-53;
  return (static_cast<double>(rng() >> 11) + 0.5) * kScale;
}

inline double exponential(Rng& rng, double rate) {
  return -std::log(uniform_open(rng)) / rate;
}

}  // namespace symbranch
