#pragma once

#include <cstdint>

namespace phasecrb {

// SplitMix64 (Steele, Lea, Flood 2014). Small, splittable, and fully
// specified, so simulation runs are reproducible across platforms.
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    static uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        return mix(state);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

inline const char* kRngId = "splitmix64";

}  // namespace phasecrb
