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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "emfisim/faults.hpp"
#include "emfisim/formats.hpp"

namespace emfisim {

/// Per-injection corruption statistics. NaN/Inf fractions and ranges are only
/// present when the measured window contains floating-point weights; ranges
/// cover finite values only. range_expansion is absent when the pre-attack
/// range has zero width.
struct CorruptionReport {
    double ber = 0.0;
    double feff_fraction = 0.0;
    std::optional<double> nan_fraction;
    std::optional<double> inf_fraction;
    std::optional<std::pair<double, double>> pre_range;
    std::optional<std::pair<double, double>> post_range;
    std::optional<double> range_expansion;
};

/// popcount(a XOR b) / (8 * len).
double bit_error_rate(const std::vector<uint8_t>& original,
                      const std::vector<uint8_t>& corrupted);

/// Fraction of bytes equal to 0xFE or 0xFF, over the whole buffer.
double feff_fraction(const std::vector<uint8_t>& bytes);
double feff_fraction(const uint8_t* bytes, size_t len);

/// Full-store FP corruption statistics between two stores with identical
/// manifests.
CorruptionReport fp_corruption_stats(const WeightStore& pre, const WeightStore& post);

/// Same statistics restricted to weights whose byte span intersects
/// [range_begin, range_end); BER/feff are computed over that byte window.
/// This is the per-chunk view used by sensitivity campaigns.
CorruptionReport window_corruption_stats(const WeightStore& pre, const WeightStore& post,
                                         uint64_t range_begin, uint64_t range_end);

/// Linear-address fault map: cell k is set when any record falls into byte
/// range [k*bytes_per_cell, (k+1)*bytes_per_cell). Cells are laid out
/// row-major with `width` columns.
struct FaultMap {
    uint32_t width = 0;
    uint32_t height = 0;
    uint32_t bytes_per_cell = 0;
    std::vector<uint8_t> cells;  // 0 or 1, row-major

    bool cell(uint32_t row, uint32_t col) const {
        return cells[static_cast<size_t>(row) * width + col] != 0;
    }
    /// Fraction of set cells among rows [row_begin, row_end).
    double row_density(uint32_t row_begin, uint32_t row_end) const;
};

constexpr uint32_t kDefaultMapWidth = 256;
constexpr uint32_t kDefaultBytesPerCell = 64;

FaultMap render_fault_map(const FaultMask& mask, uint32_t width, uint32_t bytes_per_cell);

/// Binary PGM (P5, maxval 255); corrupted cells are 255.
std::string fault_map_to_pgm(const FaultMap& map);
/// CSV of set-cell coordinates with a "row,col" header.
std::string fault_map_to_csv(const FaultMap& map);

std::string report_csv_header();
std::string report_to_csv_row(const CorruptionReport& report);

}  // namespace emfisim
