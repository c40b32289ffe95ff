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

#include "emfisim/analytics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>

namespace emfisim {

double bit_error_rate(const std::vector<uint8_t>& original,
                      const std::vector<uint8_t>& corrupted) {
    if (original.size() != corrupted.size() || original.empty()) {
        raise(ErrorCode::LengthMismatch, "bit_error_rate needs equal non-empty blobs");
    }
    uint64_t flipped = 0;
    for (size_t i = 0; i < original.size(); ++i) {
        flipped += std::popcount(static_cast<unsigned>(original[i] ^ corrupted[i]));
    }
    return static_cast<double>(flipped) / (8.0 * static_cast<double>(original.size()));
}

double feff_fraction(const uint8_t* bytes, size_t len) {
    if (len == 0) {
        raise(ErrorCode::LengthMismatch, "feff_fraction needs a non-empty buffer");
    }
    size_t hits = 0;
    for (size_t i = 0; i < len; ++i) {
        if (bytes[i] == 0xFE || bytes[i] == 0xFF) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(len);
}

double feff_fraction(const std::vector<uint8_t>& bytes) {
    return feff_fraction(bytes.data(), bytes.size());
}

namespace {

struct FpAccumulator {
    size_t total = 0;
    size_t nan_count = 0;
    size_t inf_count = 0;
    double finite_min = 0.0;
    double finite_max = 0.0;
    bool any_finite = false;

    void add(double v) {
        ++total;
        if (std::isnan(v)) {
            ++nan_count;
        } else if (std::isinf(v)) {
            ++inf_count;
        } else {
            if (!any_finite || v < finite_min) finite_min = v;
            if (!any_finite || v > finite_max) finite_max = v;
            any_finite = true;
        }
    }
};

CorruptionReport stats_impl(const WeightStore& pre, const WeightStore& post,
                            uint64_t begin, uint64_t end) {
    if (!WeightStore::same_manifest(pre, post)) {
        raise(ErrorCode::ManifestMismatch, "pre/post manifests differ");
    }
    end = std::min<uint64_t>(end, pre.blob.size());
    if (end <= begin) {
        raise(ErrorCode::OutOfBounds, "empty measurement window");
    }

    CorruptionReport report;
    std::vector<uint8_t> pre_window(pre.blob.begin() + begin, pre.blob.begin() + end);
    std::vector<uint8_t> post_window(post.blob.begin() + begin, post.blob.begin() + end);
    report.ber = bit_error_rate(pre_window, post_window);
    report.feff_fraction = feff_fraction(post_window);

    FpAccumulator acc_pre, acc_post;
    for (const auto& t : pre.tensors) {
        if (t.format != FormatKind::FP32 && t.format != FormatKind::FP16) continue;
        const size_t elem_bytes = t.format == FormatKind::FP32 ? 4 : 2;
        const uint64_t t_begin = t.byte_offset;
        const uint64_t t_end = t.byte_offset + t.byte_length;
        if (t_end <= begin || t_begin >= end) continue;

        // Element index range whose byte span intersects the window.
        const uint64_t lo = (begin > t_begin) ? (begin - t_begin) / elem_bytes : 0;
        uint64_t hi = t.num_elements();
        if (end < t_end) {
            hi = std::min<uint64_t>(hi, (end - t_begin + elem_bytes - 1) / elem_bytes);
        }
        const auto pre_vals = decode_tensor(pre, t.name);
        const auto post_vals = decode_tensor(post, t.name);
        for (uint64_t i = lo; i < hi; ++i) {
            acc_pre.add(pre_vals[i]);
            acc_post.add(post_vals[i]);
        }
    }

    if (acc_post.total > 0) {
        report.nan_fraction = static_cast<double>(acc_post.nan_count) /
                              static_cast<double>(acc_post.total);
        report.inf_fraction = static_cast<double>(acc_post.inf_count) /
                              static_cast<double>(acc_post.total);
        if (acc_pre.any_finite) {
            report.pre_range = {acc_pre.finite_min, acc_pre.finite_max};
        }
        if (acc_post.any_finite) {
            report.post_range = {acc_post.finite_min, acc_post.finite_max};
        }
        if (report.pre_range && report.post_range) {
            const double pre_width = report.pre_range->second - report.pre_range->first;
            if (pre_width > 0.0) {
                report.range_expansion =
                    (report.post_range->second - report.post_range->first) / pre_width;
            }
        }
    }
    return report;
}

}  // namespace

CorruptionReport fp_corruption_stats(const WeightStore& pre, const WeightStore& post) {
    return stats_impl(pre, post, 0, pre.blob.size());
}

CorruptionReport window_corruption_stats(const WeightStore& pre, const WeightStore& post,
                                         uint64_t range_begin, uint64_t range_end) {
    return stats_impl(pre, post, range_begin, range_end);
}

double FaultMap::row_density(uint32_t row_begin, uint32_t row_end) const {
    if (row_end <= row_begin || row_end > height || width == 0) return 0.0;
    size_t set = 0;
    for (uint32_t r = row_begin; r < row_end; ++r) {
        for (uint32_t c = 0; c < width; ++c) {
            if (cell(r, c)) ++set;
        }
    }
    return static_cast<double>(set) /
           (static_cast<double>(row_end - row_begin) * static_cast<double>(width));
}

FaultMap render_fault_map(const FaultMask& mask, uint32_t width, uint32_t bytes_per_cell) {
    if (width == 0 || bytes_per_cell == 0) {
        raise(ErrorCode::InvalidArgument, "fault map geometry must be positive");
    }
    FaultMap map;
    map.width = width;
    map.bytes_per_cell = bytes_per_cell;
    const uint64_t num_cells =
        (mask.target_len + bytes_per_cell - 1) / bytes_per_cell;
    map.height = static_cast<uint32_t>((num_cells + width - 1) / width);
    if (map.height == 0) map.height = 1;
    map.cells.assign(static_cast<size_t>(map.width) * map.height, 0);
    for (const auto& r : mask.records) {
        map.cells[static_cast<size_t>(r.offset / bytes_per_cell)] = 1;
    }
    return map;
}

std::string fault_map_to_pgm(const FaultMap& map) {
    char header[64];
    std::snprintf(header, sizeof(header), "P5\n%u %u\n255\n", map.width, map.height);
    std::string out(header);
    out.reserve(out.size() + map.cells.size());
    for (uint8_t c : map.cells) {
        out.push_back(c ? static_cast<char>(0xFF) : '\0');
    }
    return out;
}

std::string fault_map_to_csv(const FaultMap& map) {
    std::string out = "row,col\n";
    char line[48];
    for (uint32_t r = 0; r < map.height; ++r) {
        for (uint32_t c = 0; c < map.width; ++c) {
            if (map.cell(r, c)) {
                std::snprintf(line, sizeof(line), "%u,%u\n", r, c);
                out += line;
            }
        }
    }
    return out;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string fmt_optional(const std::optional<double>& v) {
    return v ? fmt_double(*v) : std::string();
}

}  // namespace

std::string report_csv_header() {
    return "ber,feff_fraction,nan_fraction,inf_fraction,"
           "pre_min,pre_max,post_min,post_max,range_expansion";
}

std::string report_to_csv_row(const CorruptionReport& r) {
    std::string row = fmt_double(r.ber) + "," + fmt_double(r.feff_fraction) + "," +
                      fmt_optional(r.nan_fraction) + "," + fmt_optional(r.inf_fraction) + ",";
    row += r.pre_range ? fmt_double(r.pre_range->first) + "," + fmt_double(r.pre_range->second)
                       : std::string(",");
    row += ",";
    row += r.post_range
               ? fmt_double(r.post_range->first) + "," + fmt_double(r.post_range->second)
               : std::string(",");
    row += "," + fmt_optional(r.range_expansion);
    return row;
}

}  // namespace emfisim
