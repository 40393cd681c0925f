#pragma once

#include <cstdint>

namespace qcs {

// SplitMix64. Small, fast, and trivially seedable; every random decision in
// the library goes through this so runs are reproducible from a single seed.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) noexcept : state_(seed) {}

    uint64_t next() noexcept {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound). bound must be > 0; modulo bias is acceptable
    // for simulation workloads.
    uint64_t next_below(uint64_t bound) noexcept {
        return next() % bound;
    }

    // Uniform double in [0, 1).
    double next_unit() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

private:
    uint64_t state_;
};

// Derives an independent stream seed from a base seed and a stream tag.
inline uint64_t mix_seed(uint64_t base, uint64_t tag) noexcept {
    SplitMix64 g(base ^ (tag * 0x9E3779B97F4A7C15ULL + 0x6A09E667F3BCC909ULL));
    return g.next();
}

} // namespace qcs
