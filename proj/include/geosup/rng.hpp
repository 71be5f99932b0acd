#pragma once

#include <cstdint>
#include <vector>

namespace geosup {

// Every seeded operation in this library draws from the generator below so
// that traces are reproducible bit-for-bit across platforms. The exact
// semantics are fixed and tests re-derive them independently:
//
//   seeding    SplitMix64 over the 64-bit seed fills the four xoshiro words:
//              state += 0x9E3779B97F4A7C15; z = state;
//              z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
//              z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
//              word = z ^ (z >> 31)
//   next_u64   xoshiro256**: r = rotl(s1 * 5, 7) * 9, then the state update
//              t = s1 << 17; s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3;
//              s2 ^= t; s3 = rotl(s3, 45)
//   unit       (next_u64() >> 11) * 2^-53, uniform in [0, 1)
//   below(n)   next_u64() % n, uniform enough over small n and fully
//              deterministic; n must be nonzero
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) w = split_mix(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// Draws k distinct indices from [0, n) by partial Fisher-Yates over the
    /// identity permutation: for i in [0, k), j = i + below(n - i), swap.
    /// Output order is the draw order.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        if (k > n) k = n;
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    static std::uint64_t split_mix(std::uint64_t& state) {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

} // namespace geosup
