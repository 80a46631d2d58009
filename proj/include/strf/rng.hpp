// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

namespace strf {

// Counter-free PCG32. Hand-rolled so that streams are reproducible across
// platforms and standard-library versions; every seeded artifact (scenes,
// jitter, initializers) depends on this being stable.
class Rng {
  public:
    explicit Rng(uint64_t seed = 0, uint64_t stream = 0) {
        state_ = 0;
        inc_ = (stream << 1u) | 1u;
        next_u32();
        state_ += splitmix64(seed);
        next_u32();
    }

    uint32_t next_u32() {
        const uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        const uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        const uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    // Uniform in [0, 1).
    double uniform() { return next_u32() * (1.0 / 4294967296.0); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint32_t below(uint32_t n) { return static_cast<uint32_t>(uniform() * n); }

    // Standard normal via Box-Muller; one value per call, cached pair discarded
    // deliberately so the stream position stays a pure function of call count.
    double normal() {
        double u1 = uniform();
        while (u1 <= 1e-12) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    static uint64_t splitmix64(uint64_t x) {
        x += 0x9E3779B97f4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    // Stable mix of several seeds into one, for per-(step, ray) substreams.
    static uint64_t mix(uint64_t a, uint64_t b, uint64_t c = 0) {
        return splitmix64(splitmix64(a) ^ splitmix64(b ^ 0x632BE59BD9B4E019ULL) ^ (c * 0xFF51AFD7ED558CCDULL));
    }

  private:
    uint64_t state_ = 0;
    uint64_t inc_ = 1;
};

}  // namespace strf
