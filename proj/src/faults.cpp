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

#include "emfisim/faults.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "emfisim/rng.hpp"

namespace emfisim {

void FaultMask::validate() const {
    uint64_t prev = 0;
    bool first = true;
    for (const auto& r : records) {
        if (r.offset >= target_len) {
            raise(ErrorCode::OutOfBounds, "fault record beyond window");
        }
        if (!first && r.offset <= prev) {
            raise(ErrorCode::InvalidArgument, "fault records must be strictly increasing");
        }
        if (r.op == FaultOp::XOR && r.value == 0) {
            raise(ErrorCode::InvalidArgument, "XOR with 0 is a no-op record");
        }
        prev = r.offset;
        first = false;
    }
}

double FaultMask::corrupted_fraction(uint64_t begin, uint64_t end) const {
    if (end <= begin) return 0.0;
    size_t hits = 0;
    for (const auto& r : records) {
        if (r.offset >= begin && r.offset < end) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(end - begin);
}

void EmfiPatternParams::validate() const {
    if (row_len == 0 || row_len > row_period || row_period > window_len) {
        raise(ErrorCode::InvalidArgument, "need 0 < row_len <= row_period <= window_len");
    }
    if (boundary_offset > window_len) {
        raise(ErrorCode::InvalidArgument, "boundary_offset exceeds window");
    }
    for (double rate : {target_rate, post_boundary_rate, ff_fraction}) {
        if (!(rate >= 0.0 && rate <= 1.0)) {
            raise(ErrorCode::InvalidArgument, "rates must lie in [0, 1]");
        }
    }
    // The duty cycle target_rate / (row_len / row_period) must be a
    // probability, otherwise the requested density is unreachable.
    const double coverage = static_cast<double>(row_len) / static_cast<double>(row_period);
    if (target_rate > coverage || post_boundary_rate > coverage) {
        raise(ErrorCode::InvalidArgument, "row geometry cannot reach the requested rate");
    }
}

FaultMask gen_random_bitflips(uint64_t len, double ber, uint64_t seed) {
    if (!(ber >= 0.0 && ber <= 1.0)) {
        raise(ErrorCode::InvalidArgument, "ber must lie in [0, 1]");
    }
    FaultMask mask;
    mask.target_len = len;
    if (ber == 0.0) return mask;
    Rng rng(seed);
    for (uint64_t i = 0; i < len; ++i) {
        uint8_t flips = 0;
        for (int bit = 0; bit < 8; ++bit) {
            if (rng.next_double() < ber) flips |= static_cast<uint8_t>(1u << bit);
        }
        if (flips != 0) {
            mask.records.push_back({i, FaultOp::XOR, flips});
        }
    }
    return mask;
}

FaultMask gen_byte_set(uint64_t len, double fraction, uint8_t value, uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        raise(ErrorCode::InvalidArgument, "fraction must lie in [0, 1]");
    }
    FaultMask mask;
    mask.target_len = len;
    const uint64_t count = static_cast<uint64_t>(
        std::floor(fraction * static_cast<double>(len)));
    if (count == 0) return mask;

    // Floyd's algorithm: count distinct offsets without materializing [0, len).
    Rng rng(seed);
    std::unordered_set<uint64_t> chosen;
    chosen.reserve(count * 2);
    for (uint64_t j = len - count; j < len; ++j) {
        const uint64_t t = rng.next_below(j + 1);
        chosen.insert(chosen.count(t) ? j : t);
    }
    std::vector<uint64_t> offsets(chosen.begin(), chosen.end());
    std::sort(offsets.begin(), offsets.end());
    mask.records.reserve(offsets.size());
    for (uint64_t off : offsets) {
        mask.records.push_back({off, FaultOp::SET, value});
    }
    return mask;
}

FaultMask gen_emfi_pattern(const EmfiPatternParams& p) {
    p.validate();
    FaultMask mask;
    mask.target_len = p.window_len;
    Rng rng(p.seed);

    const double coverage = static_cast<double>(p.row_len) / static_cast<double>(p.row_period);
    const double duty_active = p.target_rate / coverage;
    const double duty_post = p.post_boundary_rate / coverage;
    const uint64_t jitter_span = p.row_period - p.row_len + 1;

    uint64_t rows_placed = 0;
    for (uint64_t start = 0; start < p.window_len; start += p.row_period) {
        const double duty = (start < p.boundary_offset) ? duty_active : duty_post;
        const double u = rng.next_double();
        const uint64_t jitter = rng.next_below(jitter_span);
        if (u >= duty) continue;

        const uint64_t row_start = start + jitter;
        const uint64_t row_end = std::min(row_start + p.row_len, p.window_len);
        const bool fe_row = (rows_placed % 2 == 0);
        ++rows_placed;

        for (uint64_t off = row_start; off < row_end; ++off) {
            uint8_t value;
            if (fe_row) {
                // Overwrite rows are dominated by fe_value with a seeded share
                // of 0xFF bytes, matching the mixed extremal-byte population
                // the modeled pulse leaves behind.
                value = (rng.next_double() < p.ff_fraction) ? 0xFF : p.fe_value;
            } else {
                value = (off % 2 == 0) ? p.alt_pair.first : p.alt_pair.second;
            }
            mask.records.push_back({off, FaultOp::SET, value});
        }
    }
    return mask;
}

std::vector<uint8_t> apply_mask(const std::vector<uint8_t>& blob,
                                const FaultMask& mask, uint64_t base_offset) {
    if (base_offset + mask.target_len > blob.size()) {
        raise(ErrorCode::OutOfBounds, "mask window exceeds blob");
    }
    std::vector<uint8_t> out = blob;
    for (const auto& r : mask.records) {
        uint8_t& byte = out[base_offset + r.offset];
        byte = (r.op == FaultOp::XOR) ? static_cast<uint8_t>(byte ^ r.value) : r.value;
    }
    return out;
}

FaultMask diff_to_mask(const std::vector<uint8_t>& original,
                       const std::vector<uint8_t>& corrupted) {
    if (original.size() != corrupted.size()) {
        raise(ErrorCode::LengthMismatch, "blobs differ in length");
    }
    FaultMask mask;
    mask.target_len = original.size();
    for (size_t i = 0; i < original.size(); ++i) {
        const uint8_t x = original[i] ^ corrupted[i];
        if (x != 0) {
            mask.records.push_back({i, FaultOp::XOR, x});
        }
    }
    return mask;
}

}  // namespace emfisim
