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

#include "emfisim/io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

namespace emfisim {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<uint8_t> read_binary_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(ErrorCode::IoError, "cannot open " + path.string());
    }
    in.seekg(0, std::ios::end);
    const std::streamoff len = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<uint8_t> bytes(static_cast<size_t>(len));
    if (len > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), len)) {
        raise(ErrorCode::IoError, "short read from " + path.string());
    }
    return bytes;
}

void write_file_atomic(const fs::path& path, const void* data, size_t len) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            raise(ErrorCode::IoError, "cannot open " + tmp.string());
        }
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
        if (!out) {
            raise(ErrorCode::IoError, "short write to " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        raise(ErrorCode::IoError, "rename failed for " + path.string());
    }
}

void write_file_atomic(const fs::path& path, const std::string& text) {
    write_file_atomic(path, text.data(), text.size());
}

void write_file_atomic(const fs::path& path, const std::vector<uint8_t>& bytes) {
    write_file_atomic(path, bytes.data(), bytes.size());
}

namespace {

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        raise(ErrorCode::IoError, "cannot open " + path.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        raise(ErrorCode::IoError, path.string() + ": " + e.what());
    }
    return doc;
}

}  // namespace

nlohmann::json manifest_to_json(const WeightStore& store) {
    json tensors = json::array();
    for (const auto& t : store.tensors) {
        json entry = {
            {"name", t.name},
            {"shape", t.shape},
            {"format", format_name(t.format)},
            {"byte_offset", t.byte_offset},
            {"byte_length", t.byte_length},
        };
        if (t.quant) {
            entry["quant"] = {
                {"axis", t.quant->axis},
                {"scales", t.quant->scales},
                {"zero_points", t.quant->zero_points},
            };
        } else {
            entry["quant"] = nullptr;
        }
        tensors.push_back(std::move(entry));
    }
    return json{{"tensors", std::move(tensors)}};
}

std::vector<TensorMeta> manifest_from_json(const json& doc) {
    std::vector<TensorMeta> tensors;
    try {
        for (const auto& entry : doc.at("tensors")) {
            TensorMeta t;
            t.name = entry.at("name").get<std::string>();
            t.shape = entry.at("shape").get<std::vector<size_t>>();
            t.format = format_from_name(entry.at("format").get<std::string>());
            t.byte_offset = entry.at("byte_offset").get<uint64_t>();
            t.byte_length = entry.at("byte_length").get<uint64_t>();
            if (entry.contains("quant") && !entry.at("quant").is_null()) {
                const auto& q = entry.at("quant");
                QuantParams qp;
                qp.axis = q.at("axis").get<size_t>();
                qp.scales = q.at("scales").get<std::vector<double>>();
                qp.zero_points = q.at("zero_points").get<std::vector<int32_t>>();
                qp.q_min = t.format == FormatKind::INT4 ? kInt4QMin : kInt8QMin;
                qp.q_max = t.format == FormatKind::INT4 ? kInt4QMax : kInt8QMax;
                t.quant = std::move(qp);
            }
            tensors.push_back(std::move(t));
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::IoError, std::string("bad manifest: ") + e.what());
    }
    return tensors;
}

WeightStore load_store(const fs::path& manifest_path, const fs::path& blob_path) {
    WeightStore store;
    store.tensors = manifest_from_json(load_json_file(manifest_path));
    store.blob = read_binary_file(blob_path);
    store.validate();
    return store;
}

void save_store(const WeightStore& store, const fs::path& manifest_path,
                const fs::path& blob_path) {
    write_file_atomic(manifest_path, manifest_to_json(store).dump(2) + "\n");
    write_file_atomic(blob_path, store.blob);
}

nlohmann::json mask_to_json(const FaultMask& mask) {
    json records = json::array();
    for (const auto& r : mask.records) {
        records.push_back({
            {"offset", r.offset},
            {"op", r.op == FaultOp::XOR ? "xor" : "set"},
            {"value", r.value},
        });
    }
    return json{{"target_len", mask.target_len}, {"records", std::move(records)}};
}

FaultMask mask_from_json(const json& doc) {
    FaultMask mask;
    try {
        mask.target_len = doc.at("target_len").get<uint64_t>();
        for (const auto& entry : doc.at("records")) {
            FaultRecord r;
            r.offset = entry.at("offset").get<uint64_t>();
            const std::string op = entry.at("op").get<std::string>();
            if (op == "xor") {
                r.op = FaultOp::XOR;
            } else if (op == "set") {
                r.op = FaultOp::SET;
            } else {
                raise(ErrorCode::IoError, "bad mask op '" + op + "'");
            }
            const int value = entry.at("value").get<int>();
            if (value < 0 || value > 255) {
                raise(ErrorCode::IoError, "mask value outside 0-255");
            }
            r.value = static_cast<uint8_t>(value);
            mask.records.push_back(r);
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::IoError, std::string("bad mask file: ") + e.what());
    }
    mask.validate();
    return mask;
}

void save_mask_json(const FaultMask& mask, const fs::path& path) {
    write_file_atomic(path, mask_to_json(mask).dump() + "\n");
}

FaultMask load_mask_json(const fs::path& path) {
    return mask_from_json(load_json_file(path));
}

std::vector<uint8_t> mask_to_binary(const FaultMask& mask) {
    std::vector<uint8_t> bytes;
    bytes.reserve(mask.records.size() * 6);
    for (const auto& r : mask.records) {
        if (r.offset > 0xFFFFFFFFull) {
            raise(ErrorCode::OutOfBounds, "binary mask form caps offsets at 32 bits");
        }
        const uint32_t off = static_cast<uint32_t>(r.offset);
        bytes.push_back(static_cast<uint8_t>(off));
        bytes.push_back(static_cast<uint8_t>(off >> 8));
        bytes.push_back(static_cast<uint8_t>(off >> 16));
        bytes.push_back(static_cast<uint8_t>(off >> 24));
        bytes.push_back(static_cast<uint8_t>(r.op));
        bytes.push_back(r.value);
    }
    return bytes;
}

FaultMask mask_from_binary(const std::vector<uint8_t>& bytes, uint64_t target_len) {
    if (bytes.size() % 6 != 0) {
        raise(ErrorCode::IoError, "binary mask length must be a multiple of 6");
    }
    FaultMask mask;
    mask.target_len = target_len;
    for (size_t i = 0; i < bytes.size(); i += 6) {
        FaultRecord r;
        r.offset = static_cast<uint32_t>(bytes[i]) | (static_cast<uint32_t>(bytes[i + 1]) << 8) |
                   (static_cast<uint32_t>(bytes[i + 2]) << 16) |
                   (static_cast<uint32_t>(bytes[i + 3]) << 24);
        if (bytes[i + 4] > 1) {
            raise(ErrorCode::IoError, "bad opcode in binary mask");
        }
        r.op = static_cast<FaultOp>(bytes[i + 4]);
        r.value = bytes[i + 5];
        mask.records.push_back(r);
    }
    mask.validate();
    return mask;
}

Model load_model(const fs::path& model_path, const fs::path& manifest_path,
                 const fs::path& blob_path) {
    const json doc = load_json_file(model_path);
    Model model;
    try {
        model.input_shape = doc.at("input_shape").get<std::vector<size_t>>();
        model.num_classes = doc.at("num_classes").get<size_t>();
        for (const auto& entry : doc.at("layers")) {
            LayerSpec layer;
            layer.kind = layer_kind_from_name(entry.at("kind").get<std::string>());
            layer.weight_tensor = entry.value("weight", "");
            layer.bias_tensor = entry.value("bias", "");
            layer.kernel = entry.value("kernel", 0);
            layer.stride = entry.value("stride", 1);
            layer.padding = entry.value("padding", 0);
            model.layers.push_back(std::move(layer));
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::IoError, std::string("bad model file: ") + e.what());
    }
    model.store = load_store(manifest_path, blob_path);
    return model;
}

EvalSet load_eval_set(const fs::path& index_path) {
    const json doc = load_json_file(index_path);
    EvalSet eval;
    std::vector<size_t> shape;
    fs::path blob_path;
    try {
        eval.seed = doc.value("seed", 0ull);
        shape = doc.at("input_shape").get<std::vector<size_t>>();
        eval.labels = doc.at("labels").get<std::vector<size_t>>();
        blob_path = index_path.parent_path() / doc.at("blob").get<std::string>();
    } catch (const json::exception& e) {
        raise(ErrorCode::IoError, std::string("bad eval index: ") + e.what());
    }

    size_t per_image = 1;
    for (size_t d : shape) per_image *= d;
    const auto bytes = read_binary_file(blob_path);
    if (bytes.size() != eval.labels.size() * per_image * 4) {
        raise(ErrorCode::LengthMismatch, "eval blob size does not match index");
    }
    eval.images.resize(eval.labels.size());
    size_t pos = 0;
    for (auto& img : eval.images) {
        img.shape = shape;
        img.data.resize(per_image);
        for (auto& v : img.data) {
            const uint32_t bits = static_cast<uint32_t>(bytes[pos]) |
                                  (static_cast<uint32_t>(bytes[pos + 1]) << 8) |
                                  (static_cast<uint32_t>(bytes[pos + 2]) << 16) |
                                  (static_cast<uint32_t>(bytes[pos + 3]) << 24);
            v = std::bit_cast<float>(bits);
            pos += 4;
        }
    }
    return eval;
}

FaultModelSpec fault_model_from_json(const json& doc) {
    FaultModelSpec spec;
    try {
        const std::string kind = doc.at("kind").get<std::string>();
        if (kind == "emfi") {
            spec.kind = FaultModelKind::EmfiPattern;
            EmfiPatternParams& p = spec.emfi;
            p.window_len = doc.value("window_len", p.window_len);
            p.boundary_offset = doc.value("boundary_offset", p.boundary_offset);
            p.row_len = doc.value("row_len", p.row_len);
            p.row_period = doc.value("row_period", p.row_period);
            p.fe_value = static_cast<uint8_t>(doc.value("fe_value", static_cast<int>(p.fe_value)));
            if (doc.contains("alt_pair")) {
                const auto pair = doc.at("alt_pair").get<std::vector<int>>();
                if (pair.size() != 2) {
                    raise(ErrorCode::IoError, "alt_pair needs two bytes");
                }
                p.alt_pair = {static_cast<uint8_t>(pair[0]), static_cast<uint8_t>(pair[1])};
            }
            p.target_rate = doc.value("target_rate", p.target_rate);
            p.post_boundary_rate = doc.value("post_boundary_rate", p.post_boundary_rate);
            p.ff_fraction = doc.value("ff_fraction", p.ff_fraction);
        } else if (kind == "bitflips") {
            spec.kind = FaultModelKind::RandomBitflips;
            spec.ber = doc.at("ber").get<double>();
        } else if (kind == "byteset") {
            spec.kind = FaultModelKind::ByteSet;
            spec.fraction = doc.at("fraction").get<double>();
            spec.value = static_cast<uint8_t>(doc.value("value", 0xFF));
        } else {
            raise(ErrorCode::IoError, "unknown fault model '" + kind + "'");
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::IoError, std::string("bad fault model: ") + e.what());
    }
    return spec;
}

nlohmann::json fault_model_to_json(const FaultModelSpec& spec) {
    switch (spec.kind) {
        case FaultModelKind::EmfiPattern:
            return json{{"kind", "emfi"},
                        {"window_len", spec.emfi.window_len},
                        {"boundary_offset", spec.emfi.boundary_offset},
                        {"row_len", spec.emfi.row_len},
                        {"row_period", spec.emfi.row_period},
                        {"fe_value", spec.emfi.fe_value},
                        {"alt_pair", {spec.emfi.alt_pair.first, spec.emfi.alt_pair.second}},
                        {"target_rate", spec.emfi.target_rate},
                        {"post_boundary_rate", spec.emfi.post_boundary_rate},
                        {"ff_fraction", spec.emfi.ff_fraction}};
        case FaultModelKind::RandomBitflips:
            return json{{"kind", "bitflips"}, {"ber", spec.ber}};
        case FaultModelKind::ByteSet:
            return json{{"kind", "byteset"}, {"fraction", spec.fraction}, {"value", spec.value}};
    }
    raise(ErrorCode::InvalidArgument, "unknown fault model");
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

std::string chunk_row(long long index, uint64_t begin, uint64_t end, const std::string& region,
                      FormatKind format, const CorruptionReport& report, double top1,
                      double top5) {
    std::string row = std::to_string(index) + "," + std::to_string(begin) + "," +
                      std::to_string(end) + "," + region + "," + format_name(format) + ",";
    row += fmt_double(report.ber) + "," + fmt_double(report.feff_fraction) + ",";
    row += fmt_optional(report.nan_fraction) + "," + fmt_optional(report.inf_fraction) + ",";
    row += fmt_optional(report.range_expansion) + ",";
    row += fmt_double(top1) + "," + fmt_double(top5) + "\n";
    return row;
}

}  // namespace

std::string campaign_csv_header() {
    return "chunk_index,byte_start,byte_end,region,format,ber,feff_fraction,"
           "nan_fraction,inf_fraction,range_expansion,top1,top5\n";
}

std::string campaign_to_csv(const CampaignResult& result, FormatKind format,
                            uint64_t blob_len) {
    std::string csv = campaign_csv_header();
    csv += chunk_row(-1, 0, blob_len, "baseline", format, result.baseline_report,
                     result.baseline.top1, result.baseline.top5);
    for (const auto& c : result.chunks) {
        csv += chunk_row(static_cast<long long>(c.chunk_index), c.range.begin, c.range.end,
                         region_name(c.region), format, c.report, c.top1, c.top5);
    }
    return csv;
}

std::string aggregate_to_csv(const std::map<Region, RegionAggregate>& agg) {
    std::string csv = "region,chunk_count,top1_mean,top5_mean\n";
    for (const auto& [region, slot] : agg) {
        csv += std::string(region_name(region)) + "," + std::to_string(slot.chunk_count) + "," +
               fmt_double(slot.top1_mean) + "," + fmt_double(slot.top5_mean) + "\n";
    }
    return csv;
}

nlohmann::json campaign_to_json(const CampaignResult& result, FormatKind format,
                                const CampaignSpec& spec) {
    json chunks = json::array();
    for (const auto& c : result.chunks) {
        json entry = {
            {"chunk_index", c.chunk_index},
            {"byte_start", c.range.begin},
            {"byte_end", c.range.end},
            {"region", region_name(c.region)},
            {"ber", c.report.ber},
            {"feff_fraction", c.report.feff_fraction},
            {"top1", c.top1},
            {"top5", c.top5},
        };
        if (c.report.nan_fraction) entry["nan_fraction"] = *c.report.nan_fraction;
        if (c.report.inf_fraction) entry["inf_fraction"] = *c.report.inf_fraction;
        if (c.report.range_expansion) entry["range_expansion"] = *c.report.range_expansion;
        chunks.push_back(std::move(entry));
    }
    return json{
        {"format", format_name(format)},
        {"spec",
         {{"seed", spec.seed},
          {"chunk_len", result.chunk_len},
          {"fault", fault_model_to_json(spec.fault)}}},
        {"baseline", {{"top1", result.baseline.top1}, {"top5", result.baseline.top5}}},
        {"chunks", std::move(chunks)},
    };
}

}  // namespace emfisim
