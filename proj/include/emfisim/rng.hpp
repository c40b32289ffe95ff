// Copyright 2026 The emfisim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>

namespace emfisim {

/// xoshiro256** seeded through splitmix64. Every random draw in the project
/// flows through this generator so that masks, campaigns and reports are
/// byte-identical across runs and platforms. Do not swap in std::
/// distributions: their output is implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        // splitmix64 expansion of the 64-bit seed into the 256-bit state.
        uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9E3779B97F4A7C15ULL;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            word = z ^ (z >> 31);
        }
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound). Lemire's multiply-shift rejection
    /// method; exact and portable on any compiler with __uint128_t.
    uint64_t next_below(uint64_t bound) {
        if (bound == 0) return 0;
        uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * bound;
        uint64_t low = static_cast<uint64_t>(m);
        if (low < bound) {
            uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * bound;
                low = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

private:
    static uint64_t rotl(uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    uint64_t state_[4];
};

}  // namespace emfisim
