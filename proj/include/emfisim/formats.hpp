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
#include <optional>
#include <string>
#include <vector>

#include "emfisim/error.hpp"

namespace emfisim {

enum class FormatKind { FP32, FP16, INT8, INT4 };

const char* format_name(FormatKind kind);
FormatKind format_from_name(const std::string& name);
int bits_per_weight(FormatKind kind);

/// Bytes needed to store `count` weights: ceil(count * bits / 8).
size_t packed_byte_length(FormatKind kind, size_t count);

enum class FpClass { Normal, Subnormal, Zero, Inf, NaN };

const char* fp_class_name(FpClass cls);

/// Field-level view of an IEEE 754 word. biased_exponent and mantissa are the
/// raw stored fields (8/23 bits for FP32, 5/10 for FP16).
struct FpParts {
    int sign = 0;
    uint32_t biased_exponent = 0;
    uint32_t mantissa = 0;
    FpClass cls = FpClass::Zero;
};

struct FpDecoded {
    double value = 0.0;
    FpParts parts;
};

// Bit-level codec. Deliberately independent of host float hardware: decoding
// builds the value from the stored fields with exact integer/ldexp steps,
// encoding rounds the double's own bit pattern to the target precision
// (round-to-nearest-even). Every bit pattern decodes; out-of-range magnitudes
// encode to +/-Inf.
FpDecoded decode_fp32(uint32_t bits);
FpDecoded decode_fp16(uint16_t bits);
uint32_t encode_fp32(double value);
uint16_t encode_fp16(double value);

FpDecoded decode_fp(uint64_t bits, FormatKind kind);
uint64_t encode_fp(double value, FormatKind kind);

/// Per-channel affine quantization parameters. Under the symmetric scheme all
/// zero points are 0; they are kept so the record stores the full affine map.
struct QuantParams {
    size_t axis = 0;
    std::vector<double> scales;
    std::vector<int32_t> zero_points;
    int32_t q_min = 0;
    int32_t q_max = 0;

    void validate(size_t axis_len) const;
};

constexpr int32_t kInt8QMin = -128;
constexpr int32_t kInt8QMax = 127;
constexpr int32_t kInt4QMin = -8;
constexpr int32_t kInt4QMax = 7;

/// round(r/S) + Z, half-to-even, clamped to [q_min, q_max].
int32_t quantize_value(double r, const QuantParams& p, size_t channel);
/// (q - Z) * S. q must lie in [q_min, q_max].
double dequantize_value(int32_t q, const QuantParams& p, size_t channel);

/// Two's complement nibbles, low nibble first; odd counts pad the final high
/// nibble with 0.
std::vector<uint8_t> pack_int4(const std::vector<int32_t>& values);
std::vector<int32_t> unpack_int4(const uint8_t* bytes, size_t byte_len, size_t count);
std::vector<int32_t> unpack_int4(const std::vector<uint8_t>& bytes, size_t count);

struct TensorMeta {
    std::string name;
    std::vector<size_t> shape;
    FormatKind format = FormatKind::FP32;
    size_t byte_offset = 0;
    size_t byte_length = 0;
    std::optional<QuantParams> quant;

    size_t num_elements() const;
    /// Channel index of a flat row-major element index under quant->axis.
    size_t channel_of(size_t flat_index) const;
};

/// A raw little-endian weight blob plus the manifest describing the tensors
/// inside it. This is the unit faults are applied to.
struct WeightStore {
    std::vector<uint8_t> blob;
    std::vector<TensorMeta> tensors;

    const TensorMeta& find(const std::string& name) const;
    bool has(const std::string& name) const;
    void validate() const;
    /// True when both manifests describe the same tensor layout.
    static bool same_manifest(const WeightStore& a, const WeightStore& b);
};

/// Decode one tensor to real weights in row-major order. FP weights may be
/// NaN/Inf and are returned verbatim; integer weights are dequantized per
/// channel and are always finite.
std::vector<double> decode_tensor(const WeightStore& store, const std::string& name);

/// Encode real weights into the tensor's byte range inside store.blob.
/// Integer formats quantize with the tensor's QuantParams.
void encode_tensor(WeightStore& store, const std::string& name,
                   const std::vector<double>& weights);

}  // namespace emfisim
