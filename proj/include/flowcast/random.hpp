#pragma once

#include <cstdint>
#include <random>

namespace flowcast {

/**
 * @brief Seeded generator used everywhere randomness is needed.
 *
 * The engine is std::mt19937_64, whose output sequence is fixed by the
 * standard. The conversions below are written out by hand because the
 * standard distributions are implementation-defined and would make draws
 * differ between standard libraries.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 bits of resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t index(std::uint64_t n);

    /// Standard normal via Box-Muller (one value per call, no caching).
    double normal();

private:
    std::mt19937_64 engine_;
};

/// Derives an independent child seed (per repeat, per model) from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace flowcast
