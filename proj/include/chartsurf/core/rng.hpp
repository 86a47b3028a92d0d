// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "chartsurf/core/vec.hpp"

namespace chartsurf::core {

/// SplitMix64. Used everywhere randomness is needed so that outputs are
/// bit-reproducible across platforms and standard library versions.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    /// Derives an independent stream; handy for per-object sub-streams.
    Rng fork(uint64_t salt) {
        return Rng(next_u64() ^ (salt * 0x9E3779B97F4A7C15ULL + 0x165667B19E3779F9ULL));
    }

    Vec3d uniform_in_unit_ball() {
        for (;;) {
            Vec3d v{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
            if (v.squared_norm() <= 1.0) return v;
        }
    }

  private:
    uint64_t state_;
};

}  // namespace chartsurf::core
