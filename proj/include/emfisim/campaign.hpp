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
#include <map>
#include <vector>

#include "emfisim/analytics.hpp"
#include "emfisim/faults.hpp"
#include "emfisim/nn.hpp"

namespace emfisim {

struct ByteRange {
    uint64_t begin = 0;
    uint64_t end = 0;

    uint64_t length() const { return end - begin; }
    friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

enum class Region { Front, Middle, Back };

const char* region_name(Region region);

enum class FaultModelKind { EmfiPattern, RandomBitflips, ByteSet };

/// One fault-model selection with its parameters. Only the fields of the
/// selected kind are read.
struct FaultModelSpec {
    FaultModelKind kind = FaultModelKind::EmfiPattern;
    EmfiPatternParams emfi;
    double ber = 0.0;          // RandomBitflips
    double fraction = 0.0;     // ByteSet
    uint8_t value = 0xFF;      // ByteSet

    /// Build the mask for one chunk window. The seed is derived as
    /// base_seed XOR chunk_index so chunks get independent yet reproducible
    /// masks; EMFI geometry is clamped to windows smaller than a row period.
    FaultMask make_mask(uint64_t window_len, uint64_t base_seed, uint64_t chunk_index) const;
};

struct CampaignSpec {
    uint64_t chunk_len = 0;  // 0 -> default rule (4 MiB, scaled down for small blobs)
    FaultModelSpec fault;
    uint64_t seed = 21;
};

struct ChunkResult {
    size_t chunk_index = 0;
    ByteRange range;
    Region region = Region::Front;
    double top1 = 0.0;
    double top5 = 0.0;
    CorruptionReport report;
};

struct CampaignResult {
    AccuracyPair baseline;
    CorruptionReport baseline_report;
    uint64_t chunk_len = 0;
    std::vector<ChunkResult> chunks;
};

/// Contiguous ranges of chunk_len bytes covering [0, blob_len) exactly once;
/// the final range may be shorter.
std::vector<ByteRange> split_chunks(uint64_t blob_len, uint64_t chunk_len);

/// 4 MiB, scaled down to ceil(blob_len / 16) for blobs under 4 MiB so small
/// models still see at least 8 chunks.
uint64_t default_chunk_len(uint64_t blob_len);

/// Tercile of the range midpoint: [0, T/3) front, [T/3, 2T/3) middle,
/// the rest back.
Region assign_region(const ByteRange& range, uint64_t total_len);

/// Fault-inject one chunk at a time, re-evaluating accuracy on the full eval
/// set per chunk. The blob is restored between chunks; a baseline row is
/// produced from the untouched store. Fails with DegenerateBaseline when the
/// clean model's Top-1 does not exceed 3x the random-guess rate.
CampaignResult run_campaign(const Model& model, const EvalSet& eval,
                            const CampaignSpec& spec);

struct RegionAggregate {
    size_t chunk_count = 0;
    double top1_mean = 0.0;
    double top5_mean = 0.0;
};

/// Arithmetic mean of accuracies per region; regions without chunks are
/// absent from the map.
std::map<Region, RegionAggregate> aggregate_regions(const std::vector<ChunkResult>& results);

}  // namespace emfisim
