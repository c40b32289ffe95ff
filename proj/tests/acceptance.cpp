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

// Acceptance suite. Each criterion is a self-contained check that prints one
// PASS/FAIL line with the measured values; run with a criterion number to
// execute a single one, or with no arguments to run all nine.
//
// Values marked "frozen" are regression pins measured at the release seed
// (21) with the committed fixtures: the interval constraints are the actual
// acceptance bounds, the pins catch silent behavior drift.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "emfisim/analytics.hpp"
#include "emfisim/campaign.hpp"
#include "emfisim/io.hpp"
#include "emfisim/quantize.hpp"
#include "emfisim/rng.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace emfisim;

namespace {

const fs::path kFixtures(FIXTURE_DIR);
const fs::path kCli(EMFISIM_CLI_PATH);
constexpr uint64_t kReleaseSeed = 21;
constexpr uint64_t kContentSeed = 1001;

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
    void note(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// Truncated normal in [-1, 1], the weight-like content used for calibration.
double truncated_normal(Rng& rng) {
    for (;;) {
        const double u1 = rng.next_double();
        const double u2 = rng.next_double();
        const double z = std::sqrt(-2.0 * std::log(1.0 - u1)) *
                         std::cos(6.283185307179586 * u2);
        const double v = 0.35 * z;
        if (v >= -1.0 && v <= 1.0) return v;
    }
}

WeightStore weight_blob(FormatKind format, uint64_t byte_len, uint64_t seed) {
    WeightStore store;
    TensorMeta t;
    t.name = "w";
    t.format = format;
    const size_t elem_bytes = format == FormatKind::FP32 ? 4 : 2;
    t.shape = {byte_len / elem_bytes};
    t.byte_offset = 0;
    t.byte_length = byte_len;
    store.tensors.push_back(t);
    store.blob.assign(byte_len, 0);

    Rng rng(seed);
    std::vector<double> weights(t.shape[0]);
    for (auto& w : weights) w = truncated_normal(rng);
    encode_tensor(store, "w", weights);
    return store;
}

// ---------------------------------------------------------------- criteria

Check criterion_1() {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    size_t mismatches = 0;

    for (uint32_t bits = 0; bits <= 0xFFFF; ++bits) {
        const uint16_t b = static_cast<uint16_t>(bits);
        const FpDecoded d = decode_fp16(b);
        const double ref = oracles::ref_decode_fp16(b);
        if (std::isnan(ref)) {
            if (d.parts.cls != FpClass::NaN ||
                decode_fp16(encode_fp16(d.value)).parts.cls != FpClass::NaN) {
                ++mismatches;
            }
        } else if (d.value != ref || encode_fp16(d.value) != b) {
            ++mismatches;
        }
    }

    Rng rng(kReleaseSeed);
    const size_t fp32_samples = 1000000;
    for (size_t i = 0; i < fp32_samples; ++i) {
        const uint32_t bits = static_cast<uint32_t>(rng.next_u64());
        const FpDecoded d = decode_fp32(bits);
        const float hw = std::bit_cast<float>(bits);
        if (std::isnan(hw)) {
            if (d.parts.cls != FpClass::NaN ||
                decode_fp32(encode_fp32(d.value)).parts.cls != FpClass::NaN) {
                ++mismatches;
            }
        } else if (d.value != static_cast<double>(hw) || encode_fp32(d.value) != bits) {
            ++mismatches;
        }
    }

    const double elapsed = seconds_since(start);
    c.require(mismatches == 0, std::to_string(mismatches) + " mismatches");
    c.require(elapsed < 10.0, "runtime " + fmt(elapsed) + "s >= 10s");
    c.note("65536 fp16 + 1000000 fp32 patterns, 0 mismatches, " + fmt(elapsed) + "s");
    return c;
}

Check criterion_2() {
    Check c;
    Rng rng(kReleaseSeed);
    size_t violations = 0;
    size_t weights_checked = 0;

    for (int trial = 0; trial < 10000; ++trial) {
        const bool int4 = rng.next_u64() & 1;
        const size_t channels = 1 + rng.next_below(4);
        const size_t inner = 1 + rng.next_below(32);
        QuantParams p;
        p.axis = 0;
        p.q_min = int4 ? kInt4QMin : kInt8QMin;
        p.q_max = int4 ? kInt4QMax : kInt8QMax;
        p.scales.resize(channels);
        p.zero_points.resize(channels);
        for (size_t ch = 0; ch < channels; ++ch) {
            p.scales[ch] = std::ldexp(rng.next_double() + 0.05,
                                      -static_cast<int>(rng.next_below(10)));
            p.zero_points[ch] = static_cast<int32_t>(rng.next_below(9)) - 4;
        }

        WeightStore store;
        TensorMeta t;
        t.name = "w";
        t.shape = {channels, inner};
        t.format = int4 ? FormatKind::INT4 : FormatKind::INT8;
        t.byte_offset = 0;
        t.byte_length = packed_byte_length(t.format, channels * inner);
        t.quant = p;
        store.tensors.push_back(t);
        store.blob.resize(t.byte_length);
        for (auto& b : store.blob) b = static_cast<uint8_t>(rng.next_u64());

        const auto weights = decode_tensor(store, "w");
        for (size_t i = 0; i < weights.size(); ++i) {
            const size_t ch = store.tensors[0].channel_of(i);
            const double lo = p.scales[ch] * (p.q_min - p.zero_points[ch]);
            const double hi = p.scales[ch] * (p.q_max - p.zero_points[ch]);
            if (!(weights[i] >= lo && weights[i] <= hi)) ++violations;
            ++weights_checked;
        }
    }
    c.require(violations == 0, std::to_string(violations) + " bound violations");
    c.note(std::to_string(weights_checked) + " dequantized weights from 10000 corrupted buffers, 0 violations");
    return c;
}

Check criterion_3() {
    Check c;
    size_t violations = 0;
    // MSB SET to 0xFF; enumerate all 256 values of the adjacent byte. The
    // two low bytes carry a nonzero mantissa tail, as any trained weight
    // does almost surely.
    for (uint32_t adjacent = 0; adjacent < 256; ++adjacent) {
        const uint32_t word = 0xFF000000u | (adjacent << 16) | 0x0001u;
        const FpClass cls = decode_fp32(word).parts.cls;
        const bool top_bit = (adjacent & 0x80) != 0;
        if (top_bit && cls != FpClass::NaN) ++violations;
        if (!top_bit && cls != FpClass::Normal) ++violations;
    }
    c.require(violations == 0, std::to_string(violations) + " classification violations");
    c.note("256 adjacent-byte contexts, NaN iff top bit set, 0 violations");
    return c;
}

Check criterion_4() {
    Check c;
    const uint64_t len = 1 << 16;

    // One physical byte window declared as each of the four formats: the
    // same mask yields the same BER, bit for bit.
    Rng rng(7);
    std::vector<uint8_t> bytes(len);
    for (auto& b : bytes) b = static_cast<uint8_t>(rng.next_u64());
    EmfiPatternParams p;
    p.window_len = len;
    p.boundary_offset = len / 2;
    p.seed = kReleaseSeed;
    const FaultMask mask = gen_emfi_pattern(p);

    QuantParams qp;
    qp.axis = 0;
    qp.scales = {0.01};
    qp.zero_points = {0};
    double ber_ref = -1.0;
    for (FormatKind fmt :
         {FormatKind::FP32, FormatKind::FP16, FormatKind::INT8, FormatKind::INT4}) {
        WeightStore store;
        TensorMeta t;
        t.name = "w";
        const int bits = bits_per_weight(fmt);
        t.shape = {1, len * 8 / static_cast<size_t>(bits)};
        t.format = fmt;
        t.byte_offset = 0;
        t.byte_length = len;
        if (fmt == FormatKind::INT8 || fmt == FormatKind::INT4) {
            qp.q_min = fmt == FormatKind::INT8 ? kInt8QMin : kInt4QMin;
            qp.q_max = fmt == FormatKind::INT8 ? kInt8QMax : kInt4QMax;
            t.quant = qp;
        } else {
            t.quant.reset();
        }
        store.tensors = {t};
        store.blob = bytes;
        store.validate();

        const auto corrupted = apply_mask(store.blob, mask, 0);
        const double ber = bit_error_rate(store.blob, corrupted);
        if (ber_ref < 0) {
            ber_ref = ber;
        } else {
            c.require(ber == ber_ref, std::string(format_name(fmt)) + " BER differs");
        }
    }

    // Per-format encodings of weight-like content (different bytes per
    // format) under one XOR mask: BER is content-independent, so all four
    // still agree exactly.
    const FaultMask flips = gen_random_bitflips(len, 0.06, kReleaseSeed);
    double xor_ref = -1.0;
    for (FormatKind fmt : {FormatKind::FP32, FormatKind::FP16}) {
        const WeightStore store = weight_blob(fmt, len, kContentSeed);
        const auto corrupted = apply_mask(store.blob, flips, 0);
        const double ber = bit_error_rate(store.blob, corrupted);
        if (xor_ref < 0) {
            xor_ref = ber;
        } else {
            c.require(ber == xor_ref, "xor-mask BER differs between formats");
        }
    }
    {
        Rng content(kContentSeed);
        for (int variant = 0; variant < 2; ++variant) {  // int8- and int4-like bytes
            std::vector<uint8_t> blob(len);
            for (auto& b : blob) b = static_cast<uint8_t>(content.next_u64());
            const auto corrupted = apply_mask(blob, flips, 0);
            c.require(bit_error_rate(blob, corrupted) == xor_ref,
                      "xor-mask BER differs for integer blobs");
        }
    }
    c.note("same mask on four equal-length format stores, BER exactly equal (" +
           fmt(ber_ref) + " set-mask, " + fmt(xor_ref) + " xor-mask)");
    return c;
}

Check criterion_5() {
    Check c;
    const auto start = std::chrono::steady_clock::now();

    EmfiPatternParams p;  // defaults: 4 MiB window, 2 MiB boundary, seed 21
    const FaultMask mask = gen_emfi_pattern(p);
    const FaultMask again = gen_emfi_pattern(p);
    c.require(mask == again, "mask generation not deterministic");

    const double active = mask.corrupted_fraction(0, p.boundary_offset);
    const double post_rate = mask.corrupted_fraction(p.boundary_offset, p.window_len);
    c.require(active >= 0.13 && active <= 0.17,
              "active fraction " + fmt(active) + " outside 0.15 +/- 0.02");
    c.require(post_rate <= 0.02, "post-boundary fraction " + fmt(post_rate) + " > 0.02");
    c.require(std::fabs(active - 0.150490) < 1e-4, "active fraction drifted from frozen value");

    // BER on weight-like FP32 content, measured over the active region the
    // modeled pulse reaches.
    const WeightStore store = weight_blob(FormatKind::FP32, p.window_len, kContentSeed);
    const auto corrupted = apply_mask(store.blob, mask, 0);
    const std::vector<uint8_t> pre_active(store.blob.begin(),
                                          store.blob.begin() + p.boundary_offset);
    const std::vector<uint8_t> post_active(corrupted.begin(),
                                           corrupted.begin() + p.boundary_offset);
    const double ber = bit_error_rate(pre_active, post_active);
    c.require(ber >= 0.045 && ber <= 0.075, "BER " + fmt(ber) + " outside 0.06 +/- 0.015");
    c.require(std::fabs(ber - 0.0655758) < 1e-4, "BER drifted from frozen value");

    const double elapsed = seconds_since(start);
    c.require(elapsed < 5.0, "runtime " + fmt(elapsed) + "s >= 5s");
    c.note("active " + fmt(active) + ", post " + fmt(post_rate) + ", BER " + fmt(ber) +
           ", " + fmt(elapsed) + "s");
    return c;
}

Check criterion_6() {
    Check c;
    EmfiPatternParams p;
    const FaultMask mask = gen_emfi_pattern(p);

    const WeightStore fp32_pre = weight_blob(FormatKind::FP32, p.window_len, kContentSeed);
    WeightStore fp32_post = fp32_pre;
    fp32_post.blob = apply_mask(fp32_pre.blob, mask, 0);
    const CorruptionReport r32 = fp_corruption_stats(fp32_pre, fp32_post);

    const double nan32 = r32.nan_fraction.value_or(-1.0);
    c.require(nan32 >= 0.004 && nan32 <= 0.04,
              "fp32 nan fraction " + fmt(nan32) + " outside [0.4%, 4%]");
    c.require(std::fabs(nan32 - 0.0136871) < 1e-4, "fp32 nan fraction drifted from frozen value");

    const double expansion = r32.range_expansion.value_or(0.0);
    c.require(expansion >= 1e30, "range expansion " + fmt(expansion) + " < 1e30");
    c.require(r32.inf_fraction.value_or(-1.0) == 0.0, "inf fraction nonzero");

    const WeightStore fp16_pre = weight_blob(FormatKind::FP16, p.window_len, kContentSeed);
    WeightStore fp16_post = fp16_pre;
    fp16_post.blob = apply_mask(fp16_pre.blob, mask, 0);
    const CorruptionReport r16 = fp_corruption_stats(fp16_pre, fp16_post);
    const double nan16 = r16.nan_fraction.value_or(-1.0);

    // Known model limitation: 0xFE on any odd byte already encodes an
    // all-ones fp16 exponent, so the overwrite rows poison fp16 at the full
    // row-coverage rate and this ordering cannot hold under a shared mask.
    c.require(nan16 < nan32, "fp16 nan fraction " + fmt(nan16) +
                                 " not below fp32 " + fmt(nan32) +
                                 " (0xFE bytes on odd offsets always set the fp16 exponent field)");

    c.note("fp32 nan " + fmt(nan32) + ", expansion " + fmt(expansion) + ", fp16 nan " +
           fmt(nan16));
    return c;
}

Check criterion_7() {
    Check c;
    const auto start = std::chrono::steady_clock::now();

    const Model fp32 = load_model(kFixtures / "toy_model.json", kFixtures / "toy_manifest.json",
                                  kFixtures / "toy_weights.bin");
    const EvalSet eval = load_eval_set(kFixtures / "toy_eval.json");

    CampaignSpec spec;
    spec.fault.kind = FaultModelKind::EmfiPattern;
    spec.seed = kReleaseSeed;

    const CampaignResult r32 = run_campaign(fp32, eval, spec);
    c.require(r32.baseline.top1 >= 0.85,
              "baseline top1 " + fmt(r32.baseline.top1) + " < 0.85");

    double fp32_mean = 0.0;
    for (const auto& chunk : r32.chunks) fp32_mean += chunk.top1;
    fp32_mean /= static_cast<double>(r32.chunks.size());
    c.require(fp32_mean <= 0.2, "fp32 mean top1 " + fmt(fp32_mean) + " > 0.2");
    c.require(std::fabs(fp32_mean - 0.1000) < 1e-9, "fp32 mean drifted from frozen value");

    Model int8 = fp32;
    int8.store = quantize_store(fp32.store, FormatKind::INT8);
    const CampaignResult r8 = run_campaign(int8, eval, spec);
    double int8_mean = 0.0;
    for (const auto& chunk : r8.chunks) int8_mean += chunk.top1;
    int8_mean /= static_cast<double>(r8.chunks.size());
    c.require(int8_mean >= fp32_mean + 0.2,
              "int8 mean " + fmt(int8_mean) + " < fp32 mean + 0.2");
    c.require(std::fabs(int8_mean - 0.90925) < 1e-6, "int8 mean drifted from frozen value");

    const auto agg = aggregate_regions(r8.chunks);
    const double front = agg.at(Region::Front).top1_mean;
    const double back = agg.at(Region::Back).top1_mean;
    c.require(front <= back,
              "int8 front mean " + fmt(front) + " > back mean " + fmt(back));

    const double elapsed = seconds_since(start);
    c.require(elapsed < 120.0, "runtime " + fmt(elapsed) + "s >= 120s");
    c.note("baseline " + fmt(r32.baseline.top1) + ", fp32 mean " + fmt(fp32_mean) +
           ", int8 mean " + fmt(int8_mean) + ", front " + fmt(front) + " <= back " +
           fmt(back) + ", " + fmt(elapsed) + "s");
    return c;
}

Check criterion_8() {
    Check c;
    const fs::path dir = fs::temp_directory_path() / "emfisim_acceptance_8";
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (const char* name : {"toy_model.json", "toy_manifest.json", "toy_weights.bin",
                             "toy_eval.json", "toy_eval.bin"}) {
        fs::copy_file(kFixtures / name, dir / name);
    }
    std::ofstream(dir / "config.json")
        << "{\"model\":\"toy_model.json\",\"manifest\":\"toy_manifest.json\","
           "\"blob\":\"toy_weights.bin\",\"eval\":\"toy_eval.json\","
           "\"formats\":[\"fp32\",\"int8\"],\"seed\":21,"
           "\"fault\":{\"kind\":\"emfi\"}}";

    auto run_campaign_cli = [&](const std::string& out) {
        const std::string cmd = kCli.string() + " campaign --config " +
                                (dir / "config.json").string() + " --out " +
                                (dir / out).string() + " > /dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    c.require(run_campaign_cli("a"), "first campaign run failed");
    c.require(run_campaign_cli("b"), "second campaign run failed");

    auto hash_file = [](const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        return std::hash<std::string>{}(bytes) ^ bytes.size();
    };
    size_t files = 0;
    for (const char* name :
         {"results_fp32.csv", "results_int8.csv", "regions_fp32.csv", "regions_int8.csv"}) {
        const bool equal = hash_file(dir / "a" / name) == hash_file(dir / "b" / name);
        c.require(equal, std::string(name) + " differs between runs");
        ++files;
    }
    c.note(std::to_string(files) + " output files hash-identical across reruns");
    return c;
}

Check criterion_9() {
    Check c;
    constexpr uint64_t MiB = 1ull << 20;
    const uint64_t fp32_bytes = 507 * MiB;
    const size_t n32 = split_chunks(fp32_bytes, 4 * MiB).size();
    const size_t n16 = split_chunks(fp32_bytes / 2, 4 * MiB).size();
    const size_t n8 = split_chunks(fp32_bytes / 4, 4 * MiB).size();
    const size_t n4 = split_chunks(fp32_bytes / 8, 4 * MiB).size();
    c.require(n32 == 127, "fp32 chunk count " + std::to_string(n32) + " != 127");
    c.require(n16 == 64, "fp16 chunk count " + std::to_string(n16) + " != 64");
    c.require(n8 == 32, "int8 chunk count " + std::to_string(n8) + " != 32");
    c.require(n4 == 16, "int4 chunk count " + std::to_string(n4) + " != 16");
    c.note("507 MiB blob: 127/64/32/16 chunks for fp32/fp16/int8/int4");
    return c;
}

struct Criterion {
    int number;
    const char* title;
    Check (*run)();
};

const Criterion kCriteria[] = {
    {1, "IEEE 754 conformance (exhaustive fp16, sampled fp32)", criterion_1},
    {2, "integer bounding under corrupted buffers", criterion_2},
    {3, "fp32 NaN mechanism for 0xFF high-byte overwrites", criterion_3},
    {4, "BER format independence (exact equality)", criterion_4},
    {5, "EMFI mask calibration on a 4 MiB window", criterion_5},
    {6, "floating-point corruption statistics", criterion_6},
    {7, "toy campaign sensitivity ordering", criterion_7},
    {8, "campaign rerun determinism (hash comparison)", criterion_8},
    {9, "chunk-count arithmetic at full model scale", criterion_9},
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) {
        only = std::atoi(argv[1]);
        if (only < 1 || only > 9) {
            std::fprintf(stderr, "usage: %s [criterion 1-9]\n", argv[0]);
            return 1;
        }
    }

    bool all_ok = true;
    for (const auto& criterion : kCriteria) {
        if (only != 0 && criterion.number != only) continue;
        const Check result = criterion.run();
        std::printf("[%s] criterion %d: %s (%s)\n", result.ok ? "PASS" : "FAIL",
                    criterion.number, criterion.title, result.detail.c_str());
        std::fflush(stdout);
        all_ok = all_ok && result.ok;
    }
    return all_ok ? 0 : 1;
}
