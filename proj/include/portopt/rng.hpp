#pragma once

#include <cstdint>
#include <vector>

namespace portopt {

// All randomness in this project flows through the two generators below so
// that seeded runs produce identical streams on every platform. Standard
// library engines are portable but the <random> distributions are not, which
// is why the distribution helpers live here as well.

/// SplitMix64 (Steele, Lea, Flood 2014). Used for seeding and for deriving
/// independent substreams from a single top-level seed.
struct SplitMix64 {
    std::uint64_t state = 0;

    constexpr explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    constexpr std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

/// Mixes extra stream identifiers into a seed, one SplitMix64 step per tag.
/// derive_seed(s, {a, b}) gives the stream for e.g. (seed, window, objective).
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> tags) {
    std::uint64_t s = seed;
    for (std::uint64_t t : tags) {
        SplitMix64 mix(s ^ (t + 0x9E3779B97F4A7C15ULL));
        s = mix.next();
    }
    return s;
}

/// xoshiro256** 1.0 (Blackman & Vigna), seeded from SplitMix64 as the
/// reference implementation recommends. 64-bit output, period 2^256 - 1.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        SplitMix64 mix(seed);
        for (auto& word : state_) word = mix.next();
    }

    static Rng stream(std::uint64_t seed, std::uint64_t tag) {
        return Rng(derive_seed(seed, {tag}));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Unbiased integer in [0, bound) by rejection from the top of the range.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    /// Uniform double in [0, 1) with 53 random mantissa bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Approximately standard normal deviate via the Irwin-Hall sum of 12
    /// uniforms. Chosen over Box-Muller so the stream stays bit-identical
    /// across libm implementations (only IEEE adds and multiplies). Tails are
    /// truncated at +-6.
    double normal() {
        double sum = 0.0;
        for (int i = 0; i < 12; ++i) sum += uniform01();
        return sum - 6.0;
    }

    /// Deterministic Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

} // namespace portopt
