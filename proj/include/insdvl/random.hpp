#pragma once

#include <cstdint>
#include <random>

namespace insdvl {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; decorrelates nearby seed values.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed, a domain tag and an
/// index. Every module that draws randomness takes its own derived stream so
/// that trials and sensor channels can be re-run or parallelized without
/// perturbing each other.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t domain,
                                 std::uint64_t index = 0) {
  return mix64(mix64(base ^ mix64(domain)) ^ index);
}

namespace seed_domain {
inline constexpr std::uint64_t dvl = 0x44564cULL;        // "DVL"
inline constexpr std::uint64_t imu = 0x494d55ULL;        // "IMU"
inline constexpr std::uint64_t alignment = 0x414c47ULL;  // "ALG"
inline constexpr std::uint64_t split = 0x53504cULL;      // "SPL"
inline constexpr std::uint64_t init = 0x494e49ULL;       // "INI"
inline constexpr std::uint64_t shuffle = 0x534846ULL;    // "SHF"
inline constexpr std::uint64_t trial = 0x54524cULL;      // "TRL"
inline constexpr std::uint64_t dataset = 0x445354ULL;    // "DST"
}  // namespace seed_domain

}  // namespace insdvl
