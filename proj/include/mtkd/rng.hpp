// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mtkd/errors.hpp"

namespace mtkd {

// PCG32 with an explicit, serializable state. All sampling in training,
// initialization and patch selection goes through this type so that runs are
// bit-reproducible across processes and resumable from checkpoints.
class Rng {
public:
    Rng() : Rng(0x853c49e6748fea9bULL) {}

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0xda3e39cb94b95bdbULL) {
        state_ = 0;
        inc_ = (stream << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint32_t next_u32() {
        std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    std::uint64_t next_u64() {
        std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw InternalError("Rng::uniform_int: empty range");
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        // 64-bit multiply-shift; bias is negligible for the ranges used here.
        std::uint64_t r = next_u64();
        return lo + static_cast<std::int64_t>(static_cast<unsigned __int128>(r) * span >> 64);
    }

    bool coin() { return (next_u32() & 1u) != 0; }

    // Box-Muller without a cached spare, so the state is exactly two words.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Independent generator for a named purpose, derived from this one's seed.
    Rng fork(const std::string& purpose) const {
        std::uint64_t h = 1469598103934665603ULL ^ state_;
        for (char c : purpose) {
            h ^= static_cast<std::uint8_t>(c);
            h *= 1099511628211ULL;
        }
        return Rng(h, h ^ inc_);
    }

    std::pair<std::uint64_t, std::uint64_t> state() const { return {state_, inc_}; }
    void restore(std::uint64_t state, std::uint64_t inc) {
        state_ = state;
        inc_ = inc;
    }

private:
    std::uint64_t state_;
    std::uint64_t inc_;
};

} // namespace mtkd
