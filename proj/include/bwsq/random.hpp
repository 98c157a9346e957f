#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace bwsq {

// Seeded generator with platform-independent derived quantities.
// std::shuffle and the std distributions are implementation-defined, so
// everything that feeds a persisted artifact goes through this instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Derives an independent stream for (seed, stream) pairs, e.g. one per
    // design round.
    static Rng stream(std::uint64_t seed, std::uint64_t stream_index) {
        return Rng(mix(mix(seed) ^ (stream_index + 0x9e3779b97f4a7c15ULL)));
    }

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) {
        // Rejection sampling on the top of the range keeps this unbiased.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    static std::uint64_t mix(std::uint64_t z) {
        // splitmix64 finalizer
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace bwsq
