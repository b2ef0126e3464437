#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace schedlab::rng {

// Counter-based random numbers: every draw is a pure hash of
// (seed, stream, counters...), so replications can run in parallel and still
// reproduce the serial results bit for bit.

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Stream tags keep draws for different purposes statistically independent.
enum Stream : std::uint64_t {
    kChannel = 1,
    kProcessNoise = 2,
    kMeasurementNoise = 3,
    kInitialError = 4,
    kGenerator = 5,
};

inline std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

inline std::uint64_t hash(std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = kGolden;
    for (std::uint64_t k : keys) h = mix(h ^ (k + kGolden));
    return h;
}

/// Uniform double in [0, 1).
inline double uniform(std::initializer_list<std::uint64_t> keys) {
    return static_cast<double>(hash(keys) >> 11) * 0x1.0p-53;
}

inline bool bernoulli(double p, std::initializer_list<std::uint64_t> keys) {
    return uniform(keys) < p;
}

/// Standard normal via Box-Muller; both uniforms derive from one hash.
inline double gaussian(std::initializer_list<std::uint64_t> keys) {
    const std::uint64_t h1 = hash(keys);
    const std::uint64_t h2 = mix(h1 ^ kGolden);
    // u1 in (0, 1] so the log is finite.
    const double u1 = static_cast<double>((h1 >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace schedlab::rng
