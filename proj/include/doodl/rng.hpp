#pragma once

#include <cstdint>

namespace doodl::rng {

// Counter-based deterministic generator (SplitMix64 finalizer over a mixed
// (seed, stream, counter) key). Platform-independent, so serialized seeds
// reproduce the exact same draws anywhere; streams are independent of the
// order they are consumed in.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix3(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ counter);
}

// Uniform in the open interval (0, 1).
inline double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    const std::uint64_t bits = mix3(seed, stream, counter) >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller; one draw consumes two counter slots.
double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

}  // namespace doodl::rng
