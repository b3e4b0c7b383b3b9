#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "bvote/bytes.hpp"

namespace bvote {

/// Seedable deterministic randomness source. Every IV, salt, uid draw, and
/// network fault roll in the artifact comes from one of these streams so a
/// scenario replays bit-identically from its seed.
///
/// Draws bypass std distributions (their output is stdlib-specific); only raw
/// engine words are used, so streams are reproducible everywhere mt19937_64 is.
class DeterministicRng {
public:
    explicit DeterministicRng(uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    /// Independent child stream; `stream_id` keeps sibling streams decoupled.
    DeterministicRng fork(uint64_t stream_id) const {
        return DeterministicRng(splitmix64(seed_ ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1))));
    }

    uint64_t next_u64() { return engine_(); }

    /// Uniform in [lo, hi] via rejection sampling (unbiased).
    uint64_t uniform(uint64_t lo, uint64_t hi) {
        if (lo >= hi) return lo;
        uint64_t range = hi - lo + 1;
        if (range == 0) return next_u64();  // full width
        uint64_t limit = UINT64_MAX - UINT64_MAX % range;
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return lo + v % range;
    }

    /// True with probability p (p in [0,1]).
    bool chance(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 < p;
    }

    void fill(std::span<uint8_t> out) {
        size_t i = 0;
        while (i < out.size()) {
            uint64_t w = next_u64();
            for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
                out[i] = static_cast<uint8_t>(w >> (8 * b));
            }
        }
    }

    Bytes bytes(size_t n) {
        Bytes out(n);
        fill(out);
        return out;
    }

    static uint64_t splitmix64(uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace bvote
