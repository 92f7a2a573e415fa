#pragma once

// Counter-based random numbers: every draw is a pure function of
// (seed, stream, index), so generated data does not depend on evaluation order.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace arcm::rng {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return mix64(mix64(mix64(seed) ^ stream) ^ index);
}

// Uniform on the open interval (0, 1).
inline double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t bits = hash(seed, stream, index) >> 11;  // 53 bits
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two uniforms drawn at 2*index and 2*index+1.
inline double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const double u1 = uniform(seed, stream, 2 * index);
  const double u2 = uniform(seed, stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Student-t with 3 degrees of freedom: Z / sqrt(chi2_3 / 3).
inline double student_t3(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const double z = normal(seed, stream, 4 * index);
  double chi2 = 0.0;
  for (std::uint64_t k = 1; k <= 3; ++k) {
    const double g = normal(seed, stream, 4 * index + k);
    chi2 += g * g;
  }
  return z / std::sqrt(chi2 / 3.0);
}

// Stream identifiers, kept distinct so draws never collide.
enum Stream : std::uint64_t {
  kFeatures = 1,
  kWeights = 2,
  kLabelFlip = 3,
  kRegressionNoise = 4,
  kStartPoint = 5,
  kSubsample = 6,
  kTestInstance = 7,
  kQuadratic = 8,
};

}  // namespace arcm::rng
