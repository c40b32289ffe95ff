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

#include <doctest.h>

#include "emfisim/analytics.hpp"
#include "emfisim/faults.hpp"
#include "emfisim/io.hpp"
#include "emfisim/rng.hpp"

using namespace emfisim;

namespace {

std::vector<uint8_t> random_bytes(size_t len, uint64_t seed) {
    Rng rng(seed);
    std::vector<uint8_t> bytes(len);
    for (auto& b : bytes) b = static_cast<uint8_t>(rng.next_u64());
    return bytes;
}

}  // namespace

TEST_CASE("gen_random_bitflips: zero rate gives an empty mask") {
    const auto mask = gen_random_bitflips(4096, 0.0, 123);
    CHECK(mask.records.empty());
    CHECK(mask.target_len == 4096);
}

TEST_CASE("gen_random_bitflips: measured BER matches the requested rate") {
    const uint64_t len = 1ull << 20;
    const auto mask = gen_random_bitflips(len, 0.06, 21);
    const auto blob = random_bytes(len, 9);
    const auto post = apply_mask(blob, mask, 0);
    const double ber = bit_error_rate(blob, post);
    CHECK(ber == doctest::Approx(0.06).epsilon(0.002 / 0.06));
}

TEST_CASE("gen_random_bitflips: deterministic in all parameters") {
    const auto a = gen_random_bitflips(1 << 16, 0.03, 42);
    const auto b = gen_random_bitflips(1 << 16, 0.03, 42);
    CHECK(a == b);
    const auto c = gen_random_bitflips(1 << 16, 0.03, 43);
    CHECK(a.records != c.records);
}

TEST_CASE("gen_byte_set: exact counts and determinism") {
    const auto half = gen_byte_set(100, 0.5, 0xFF, 7);
    CHECK(half.records.size() == 50);
    for (const auto& r : half.records) {
        CHECK(r.op == FaultOp::SET);
        CHECK(r.value == 0xFF);
    }

    const auto all = gen_byte_set(8, 1.0, 0xFE, 7);
    CHECK(all.records.size() == 8);

    CHECK(gen_byte_set(1 << 16, 0.25, 0xFF, 3) == gen_byte_set(1 << 16, 0.25, 0xFF, 3));
}

TEST_CASE("gen_byte_set: calibrated extremal-byte fraction on a zero blob") {
    // With fraction 0.071 and value 0xFF over a zeroed megabyte, the
    // post-injection 0xFE/0xFF byte fraction equals the requested fraction.
    const uint64_t len = 1u << 20;
    const auto mask = gen_byte_set(len, 0.071, 0xFF, 11);
    std::vector<uint8_t> blob(len, 0);
    const auto post = apply_mask(blob, mask, 0);
    CHECK(feff_fraction(post) == doctest::Approx(0.071).epsilon(1e-4));
}

TEST_CASE("gen_emfi_pattern: corrupted-byte fractions per region") {
    EmfiPatternParams p;  // defaults: 4 MiB window, 2 MiB boundary
    const auto mask = gen_emfi_pattern(p);

    const double active = mask.corrupted_fraction(0, p.boundary_offset);
    const double post = mask.corrupted_fraction(p.boundary_offset, p.window_len);
    CHECK(active == doctest::Approx(0.15).epsilon(0.02 / 0.15));
    CHECK(post <= 0.02);
    CHECK(post > 0.0);
}

TEST_CASE("gen_emfi_pattern: deterministic per parameter set") {
    EmfiPatternParams p;
    p.window_len = 1 << 18;
    p.boundary_offset = 1 << 17;
    CHECK(gen_emfi_pattern(p) == gen_emfi_pattern(p));
    EmfiPatternParams q = p;
    q.seed = p.seed + 1;
    CHECK_FALSE(gen_emfi_pattern(q) == gen_emfi_pattern(p));
}

TEST_CASE("gen_emfi_pattern: row structure uses the configured byte values") {
    EmfiPatternParams p;
    p.window_len = 1 << 16;
    p.boundary_offset = 1 << 16;
    const auto mask = gen_emfi_pattern(p);
    REQUIRE(!mask.records.empty());
    size_t fe_like = 0, alt_like = 0;
    for (const auto& r : mask.records) {
        CHECK(r.op == FaultOp::SET);
        if (r.value == p.fe_value || r.value == 0xFF) {
            ++fe_like;
        } else {
            // Alternating rows follow absolute byte parity.
            const uint8_t want = (r.offset % 2 == 0) ? p.alt_pair.first : p.alt_pair.second;
            CHECK(r.value == want);
            ++alt_like;
        }
    }
    // Rows alternate, so both populations are close to half of the records.
    CHECK(fe_like > mask.records.size() / 3);
    CHECK(alt_like > mask.records.size() / 3);
}

TEST_CASE("apply_mask: spec examples") {
    const std::vector<uint8_t> blob{0x00};
    FaultMask empty;
    empty.target_len = 1;
    CHECK(apply_mask(blob, empty, 0) == blob);

    FaultMask set;
    set.target_len = 1;
    set.records = {{0, FaultOp::SET, 0xFE}};
    CHECK(apply_mask(blob, set, 0) == std::vector<uint8_t>{0xFE});

    FaultMask flip;
    flip.target_len = 1;
    flip.records = {{0, FaultOp::XOR, 0xFF}};
    const auto once = apply_mask(blob, flip, 0);
    CHECK(once == std::vector<uint8_t>{0xFF});
    CHECK(apply_mask(once, flip, 0) == blob);  // XOR involution

    FaultMask wide;
    wide.target_len = 2;
    CHECK_THROWS_AS(apply_mask(blob, wide, 0), Error);
    CHECK_THROWS_AS(apply_mask(blob, empty, 1), Error);
}

TEST_CASE("diff_to_mask: spec examples and apply/diff identity") {
    CHECK(diff_to_mask({0x11, 0x22}, {0x11, 0x22}).records.empty());

    const auto single = diff_to_mask({0x00}, {0xFE});
    REQUIRE(single.records.size() == 1);
    CHECK(single.records[0].op == FaultOp::XOR);
    CHECK(single.records[0].value == 0xFE);

    CHECK_THROWS_AS(diff_to_mask({0x00}, {0x00, 0x01}), Error);

    for (uint64_t seed = 0; seed < 20; ++seed) {
        const auto a = random_bytes(512, seed * 2);
        const auto b = random_bytes(512, seed * 2 + 1);
        CHECK(apply_mask(a, diff_to_mask(a, b), 0) == b);
    }
}

TEST_CASE("same mask on equal-length blobs of all formats gives identical BER") {
    // BER acts on bytes before any format interpretation, so reinterpreting
    // one byte window as FP32/FP16/INT8/INT4 content cannot change it.
    const uint64_t len = 1 << 16;
    const auto blob = random_bytes(len, 5);
    EmfiPatternParams p;
    p.window_len = len;
    p.boundary_offset = len / 2;
    const auto mask = gen_emfi_pattern(p);
    const auto post = apply_mask(blob, mask, 0);
    const double ber = bit_error_rate(blob, post);
    CHECK(ber > 0.0);

    // XOR masks additionally make BER independent of the underlying content.
    const auto flips = gen_random_bitflips(len, 0.05, 17);
    const auto c1 = random_bytes(len, 100);
    const auto c2 = random_bytes(len, 200);
    CHECK(bit_error_rate(c1, apply_mask(c1, flips, 0)) ==
          bit_error_rate(c2, apply_mask(c2, flips, 0)));
}

TEST_CASE("mask serialization round trips") {
    EmfiPatternParams p;
    p.window_len = 1 << 14;
    p.boundary_offset = 1 << 13;
    const auto mask = gen_emfi_pattern(p);

    const auto doc = mask_to_json(mask);
    CHECK(mask_from_json(doc) == mask);

    const auto bin = mask_to_binary(mask);
    CHECK(bin.size() == mask.records.size() * 6);
    CHECK(mask_from_binary(bin, mask.target_len) == mask);
}

TEST_CASE("gen_emfi_pattern: invalid parameters are rejected") {
    EmfiPatternParams p;
    p.row_len = 0;
    CHECK_THROWS_AS(gen_emfi_pattern(p), Error);

    p = EmfiPatternParams{};
    p.row_len = 128;  // exceeds row_period
    CHECK_THROWS_AS(gen_emfi_pattern(p), Error);

    p = EmfiPatternParams{};
    p.boundary_offset = p.window_len + 1;
    CHECK_THROWS_AS(gen_emfi_pattern(p), Error);

    p = EmfiPatternParams{};
    p.target_rate = 1.5;
    CHECK_THROWS_AS(gen_emfi_pattern(p), Error);

    p = EmfiPatternParams{};
    p.target_rate = 0.5;  // unreachable with 16/64 row geometry
    CHECK_THROWS_AS(gen_emfi_pattern(p), Error);
}

TEST_CASE("mask validation rejects bad records") {
    FaultMask mask;
    mask.target_len = 10;
    mask.records = {{11, FaultOp::SET, 0xFF}};
    CHECK_THROWS_AS(mask.validate(), Error);

    mask.records = {{2, FaultOp::XOR, 0x00}};
    CHECK_THROWS_AS(mask.validate(), Error);

    mask.records = {{2, FaultOp::SET, 0x01}, {2, FaultOp::SET, 0x02}};
    CHECK_THROWS_AS(mask.validate(), Error);
}
