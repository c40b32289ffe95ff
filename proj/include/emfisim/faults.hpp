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

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "emfisim/error.hpp"

namespace emfisim {

enum class FaultOp : uint8_t { XOR = 0, SET = 1 };

struct FaultRecord {
    uint64_t offset = 0;
    FaultOp op = FaultOp::XOR;
    uint8_t value = 0;

    friend bool operator==(const FaultRecord&, const FaultRecord&) = default;
};

/// Ordered byte-level fault list over a window of target_len bytes. At most
/// one record per offset; XOR records never carry value 0.
struct FaultMask {
    std::vector<FaultRecord> records;
    uint64_t target_len = 0;

    void validate() const;
    /// Fraction of bytes in [begin, end) that carry a record.
    double corrupted_fraction(uint64_t begin, uint64_t end) const;

    friend bool operator==(const FaultMask&, const FaultMask&) = default;
};

/// Geometry and rates of the modeled injection pattern: periodic rows of
/// overwritten bytes, dense up to boundary_offset and sparse after it.
/// Rows alternate between a 0xFE overwrite (with an ff_fraction share of the
/// bytes taking 0xFF instead) and an alternating two-byte pattern anchored to
/// absolute byte parity. All randomness comes from the seed.
struct EmfiPatternParams {
    uint64_t window_len = 4ull << 20;
    uint64_t boundary_offset = 2ull << 20;
    uint64_t row_len = 16;
    uint64_t row_period = 64;
    uint8_t fe_value = 0xFE;
    std::pair<uint8_t, uint8_t> alt_pair{0x00, 0x3C};
    double target_rate = 0.15;
    double post_boundary_rate = 0.01;
    double ff_fraction = 0.35;
    uint64_t seed = 21;

    void validate() const;
};

/// Independent per-bit flips with probability ber; flips within a byte merge
/// into a single XOR record.
FaultMask gen_random_bitflips(uint64_t len, double ber, uint64_t seed);

/// floor(fraction * len) distinct offsets chosen uniformly without
/// replacement, each SET to value.
FaultMask gen_byte_set(uint64_t len, double fraction, uint8_t value, uint64_t seed);

FaultMask gen_emfi_pattern(const EmfiPatternParams& p);

/// New blob with the mask applied at base_offset; the input is untouched.
std::vector<uint8_t> apply_mask(const std::vector<uint8_t>& blob,
                                const FaultMask& mask, uint64_t base_offset);

/// One XOR record per differing byte; apply_mask(original, result, 0)
/// reproduces `corrupted`.
FaultMask diff_to_mask(const std::vector<uint8_t>& original,
                       const std::vector<uint8_t>& corrupted);

}  // namespace emfisim
