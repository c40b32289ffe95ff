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
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "emfisim/campaign.hpp"

namespace emfisim {

std::vector<uint8_t> read_binary_file(const std::filesystem::path& path);

/// Write-then-rename so partially written outputs never appear under the
/// final name.
void write_file_atomic(const std::filesystem::path& path, const void* data, size_t len);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
void write_file_atomic(const std::filesystem::path& path, const std::vector<uint8_t>& bytes);

// Weight manifest: {"tensors": [{name, shape, format, byte_offset,
// byte_length, quant: null | {axis, scales, zero_points}}]}. The blob is a
// separate raw little-endian file.
WeightStore load_store(const std::filesystem::path& manifest_path,
                       const std::filesystem::path& blob_path);
nlohmann::json manifest_to_json(const WeightStore& store);
std::vector<TensorMeta> manifest_from_json(const nlohmann::json& doc);
void save_store(const WeightStore& store, const std::filesystem::path& manifest_path,
                const std::filesystem::path& blob_path);

// Mask files: JSON {target_len, records: [{offset, op, value}]} and the
// compact 6-byte binary form (4-byte LE offset, opcode, value).
nlohmann::json mask_to_json(const FaultMask& mask);
FaultMask mask_from_json(const nlohmann::json& doc);
void save_mask_json(const FaultMask& mask, const std::filesystem::path& path);
FaultMask load_mask_json(const std::filesystem::path& path);
std::vector<uint8_t> mask_to_binary(const FaultMask& mask);
FaultMask mask_from_binary(const std::vector<uint8_t>& bytes, uint64_t target_len);

// Model description: {"input_shape", "num_classes", "layers": [...]}.
Model load_model(const std::filesystem::path& model_path,
                 const std::filesystem::path& manifest_path,
                 const std::filesystem::path& blob_path);

// Eval set: JSON index {"seed", "input_shape", "labels", "blob"} plus a raw
// float32 little-endian input blob next to the index file.
EvalSet load_eval_set(const std::filesystem::path& index_path);

FaultModelSpec fault_model_from_json(const nlohmann::json& doc);
nlohmann::json fault_model_to_json(const FaultModelSpec& spec);

std::string campaign_csv_header();
std::string campaign_to_csv(const CampaignResult& result, FormatKind format,
                            uint64_t blob_len);
std::string aggregate_to_csv(const std::map<Region, RegionAggregate>& agg);
nlohmann::json campaign_to_json(const CampaignResult& result, FormatKind format,
                                const CampaignSpec& spec);

}  // namespace emfisim
