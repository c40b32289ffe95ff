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

#include "emfisim/campaign.hpp"

#include <algorithm>

namespace emfisim {

const char* region_name(Region region) {
    switch (region) {
        case Region::Front: return "front";
        case Region::Middle: return "middle";
        case Region::Back: return "back";
    }
    return "?";
}

FaultMask FaultModelSpec::make_mask(uint64_t window_len, uint64_t base_seed,
                                    uint64_t chunk_index) const {
    const uint64_t seed = base_seed ^ chunk_index;
    switch (kind) {
        case FaultModelKind::RandomBitflips:
            return gen_random_bitflips(window_len, ber, seed);
        case FaultModelKind::ByteSet:
            return gen_byte_set(window_len, fraction, value, seed);
        case FaultModelKind::EmfiPattern: {
            EmfiPatternParams p = emfi;
            p.window_len = window_len;
            p.boundary_offset = std::min(p.boundary_offset, window_len);
            if (p.row_period > window_len) {
                // Shrink the geometry proportionally so tiny windows keep the
                // same duty cycle.
                const double scale = static_cast<double>(window_len) /
                                     static_cast<double>(p.row_period);
                p.row_period = window_len;
                p.row_len = std::max<uint64_t>(
                    1, static_cast<uint64_t>(static_cast<double>(p.row_len) * scale));
            }
            p.seed = seed;
            return gen_emfi_pattern(p);
        }
    }
    raise(ErrorCode::InvalidArgument, "unknown fault model");
}

std::vector<ByteRange> split_chunks(uint64_t blob_len, uint64_t chunk_len) {
    if (blob_len == 0) {
        raise(ErrorCode::InvalidArgument, "cannot split an empty blob");
    }
    if (chunk_len == 0) {
        raise(ErrorCode::InvalidArgument, "chunk_len must be positive");
    }
    std::vector<ByteRange> ranges;
    for (uint64_t begin = 0; begin < blob_len; begin += chunk_len) {
        ranges.push_back({begin, std::min(begin + chunk_len, blob_len)});
    }
    return ranges;
}

uint64_t default_chunk_len(uint64_t blob_len) {
    constexpr uint64_t kFourMiB = 4ull << 20;
    if (blob_len >= kFourMiB) return kFourMiB;
    return (blob_len + 15) / 16;
}

Region assign_region(const ByteRange& range, uint64_t total_len) {
    if (range.end > total_len || range.end <= range.begin) {
        raise(ErrorCode::OutOfBounds, "range outside blob");
    }
    // Compare 2*midpoint against the tercile boundaries to stay in integers.
    const uint64_t mid2 = range.begin + range.end;
    if (3 * mid2 < 2 * total_len) return Region::Front;
    if (3 * mid2 < 4 * total_len) return Region::Middle;
    return Region::Back;
}

CampaignResult run_campaign(const Model& model, const EvalSet& eval,
                            const CampaignSpec& spec) {
    model.store.validate();

    const WeightMap clean_weights = load_weights(model);
    CampaignResult result;
    result.baseline = evaluate(model, clean_weights, eval);
    result.baseline_report =
        window_corruption_stats(model.store, model.store, 0, model.store.blob.size());

    const double random_guess = 1.0 / static_cast<double>(model.num_classes);
    if (!(result.baseline.top1 > 3.0 * random_guess)) {
        raise(ErrorCode::DegenerateBaseline, "baseline Top-1 too close to random guessing");
    }

    result.chunk_len = spec.chunk_len > 0 ? spec.chunk_len
                                          : default_chunk_len(model.store.blob.size());
    const auto ranges = split_chunks(model.store.blob.size(), result.chunk_len);

    for (size_t i = 0; i < ranges.size(); ++i) {
        const ByteRange range = ranges[i];
        const FaultMask mask = spec.fault.make_mask(range.length(), spec.seed, i);

        Model faulted = model;
        faulted.store.blob = apply_mask(model.store.blob, mask, range.begin);

        ChunkResult chunk;
        chunk.chunk_index = i;
        chunk.range = range;
        chunk.region = assign_region(range, model.store.blob.size());
        chunk.report =
            window_corruption_stats(model.store, faulted.store, range.begin, range.end);
        const WeightMap weights = load_weights(faulted);
        const AccuracyPair acc = evaluate(faulted, weights, eval);
        chunk.top1 = acc.top1;
        chunk.top5 = acc.top5;
        result.chunks.push_back(std::move(chunk));
    }
    return result;
}

std::map<Region, RegionAggregate> aggregate_regions(const std::vector<ChunkResult>& results) {
    if (results.empty()) {
        raise(ErrorCode::InvalidArgument, "no chunk results to aggregate");
    }
    std::map<Region, RegionAggregate> agg;
    for (const auto& r : results) {
        auto& slot = agg[r.region];
        ++slot.chunk_count;
        slot.top1_mean += r.top1;
        slot.top5_mean += r.top5;
    }
    for (auto& [region, slot] : agg) {
        slot.top1_mean /= static_cast<double>(slot.chunk_count);
        slot.top5_mean /= static_cast<double>(slot.chunk_count);
    }
    return agg;
}

}  // namespace emfisim
