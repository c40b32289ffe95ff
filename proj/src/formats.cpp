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

#include "emfisim/formats.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace emfisim {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidReal: return "InvalidReal";
        case ErrorCode::InvalidQuant: return "InvalidQuant";
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::UnknownTensor: return "UnknownTensor";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::ManifestMismatch: return "ManifestMismatch";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::DegenerateBaseline: return "DegenerateBaseline";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

const char* format_name(FormatKind kind) {
    switch (kind) {
        case FormatKind::FP32: return "fp32";
        case FormatKind::FP16: return "fp16";
        case FormatKind::INT8: return "int8";
        case FormatKind::INT4: return "int4";
    }
    return "?";
}

FormatKind format_from_name(const std::string& name) {
    if (name == "fp32") return FormatKind::FP32;
    if (name == "fp16") return FormatKind::FP16;
    if (name == "int8") return FormatKind::INT8;
    if (name == "int4") return FormatKind::INT4;
    raise(ErrorCode::InvalidArgument, "unknown format '" + name + "'");
}

int bits_per_weight(FormatKind kind) {
    switch (kind) {
        case FormatKind::FP32: return 32;
        case FormatKind::FP16: return 16;
        case FormatKind::INT8: return 8;
        case FormatKind::INT4: return 4;
    }
    return 0;
}

size_t packed_byte_length(FormatKind kind, size_t count) {
    return (count * static_cast<size_t>(bits_per_weight(kind)) + 7) / 8;
}

const char* fp_class_name(FpClass cls) {
    switch (cls) {
        case FpClass::Normal: return "normal";
        case FpClass::Subnormal: return "subnormal";
        case FpClass::Zero: return "zero";
        case FpClass::Inf: return "inf";
        case FpClass::NaN: return "nan";
    }
    return "?";
}

namespace {

// Field geometry for the two IEEE formats in play.
struct FpLayout {
    int exp_bits;
    int mant_bits;
    int bias() const { return (1 << (exp_bits - 1)) - 1; }
    uint32_t exp_mask() const { return (1u << exp_bits) - 1; }
    uint32_t mant_mask() const { return (1u << mant_bits) - 1; }
};

constexpr FpLayout kFp32{8, 23};
constexpr FpLayout kFp16{5, 10};

FpDecoded decode_bits(uint32_t bits, const FpLayout& ly) {
    FpDecoded out;
    out.parts.sign = static_cast<int>((bits >> (ly.exp_bits + ly.mant_bits)) & 1u);
    out.parts.biased_exponent = (bits >> ly.mant_bits) & ly.exp_mask();
    out.parts.mantissa = bits & ly.mant_mask();

    const double sign = out.parts.sign ? -1.0 : 1.0;
    if (out.parts.biased_exponent == ly.exp_mask()) {
        if (out.parts.mantissa == 0) {
            out.parts.cls = FpClass::Inf;
            out.value = sign * std::numeric_limits<double>::infinity();
        } else {
            out.parts.cls = FpClass::NaN;
            out.value = std::numeric_limits<double>::quiet_NaN();
        }
    } else if (out.parts.biased_exponent == 0) {
        if (out.parts.mantissa == 0) {
            out.parts.cls = FpClass::Zero;
            out.value = sign * 0.0;
        } else {
            out.parts.cls = FpClass::Subnormal;
            out.value = sign * std::ldexp(static_cast<double>(out.parts.mantissa),
                                          1 - ly.bias() - ly.mant_bits);
        }
    } else {
        out.parts.cls = FpClass::Normal;
        const uint32_t significand = out.parts.mantissa | (1u << ly.mant_bits);
        out.value = sign * std::ldexp(static_cast<double>(significand),
                                      static_cast<int>(out.parts.biased_exponent) -
                                          ly.bias() - ly.mant_bits);
    }
    return out;
}

uint32_t encode_bits(double value, const FpLayout& ly) {
    const uint32_t sign_bit = std::signbit(value)
                                  ? (1u << (ly.exp_bits + ly.mant_bits))
                                  : 0u;
    const uint32_t exp_shift = static_cast<uint32_t>(ly.mant_bits);

    if (std::isnan(value)) {
        // Canonical quiet NaN; payloads are not preserved.
        return sign_bit | (ly.exp_mask() << exp_shift) | (1u << (ly.mant_bits - 1));
    }
    if (std::isinf(value)) {
        return sign_bit | (ly.exp_mask() << exp_shift);
    }
    if (value == 0.0) {
        return sign_bit;
    }

    const uint64_t raw = std::bit_cast<uint64_t>(value);
    const int d_exp = static_cast<int>((raw >> 52) & 0x7FF);
    const uint64_t d_mant = raw & ((uint64_t{1} << 52) - 1);
    const int emin = 1 - ly.bias();

    if (d_exp == 0) {
        // Double subnormal: magnitude < 2^-1022, far below half the target's
        // smallest subnormal. Rounds to signed zero.
        return sign_bit;
    }

    int e = d_exp - 1023;
    const uint64_t sig = (uint64_t{1} << 52) | d_mant;  // value = sig * 2^(e-52)

    uint64_t keep;
    if (e >= emin) {
        const int shift = 52 - ly.mant_bits;
        keep = sig >> shift;
        const uint64_t rem = sig & ((uint64_t{1} << shift) - 1);
        const uint64_t half = uint64_t{1} << (shift - 1);
        if (rem > half || (rem == half && (keep & 1))) ++keep;
        if (keep == (uint64_t{2} << ly.mant_bits)) {
            keep >>= 1;
            ++e;
        }
        const int biased = e + ly.bias();
        if (biased >= static_cast<int>(ly.exp_mask())) {
            return sign_bit | (ly.exp_mask() << exp_shift);  // overflow -> Inf
        }
        return sign_bit | (static_cast<uint32_t>(biased) << exp_shift) |
               (static_cast<uint32_t>(keep) & ly.mant_mask());
    }

    // Subnormal range of the target: round sig * 2^(e-52) to multiples of
    // 2^(emin - mant_bits).
    const int shift = (52 - ly.mant_bits) + (emin - e);
    if (shift >= 64) {
        return sign_bit;  // underflow to zero (ties impossible: sig < 2^53)
    }
    keep = sig >> shift;
    const uint64_t rem = sig & ((uint64_t{1} << shift) - 1);
    const uint64_t half = uint64_t{1} << (shift - 1);
    if (rem > half || (rem == half && (keep & 1))) ++keep;
    // keep == 2^mant_bits after rounding up lands exactly on the smallest
    // normal, whose encoding is exponent field 1 with mantissa 0.
    return sign_bit | static_cast<uint32_t>(keep);
}

}  // namespace

FpDecoded decode_fp32(uint32_t bits) { return decode_bits(bits, kFp32); }

FpDecoded decode_fp16(uint16_t bits) { return decode_bits(bits, kFp16); }

uint32_t encode_fp32(double value) { return encode_bits(value, kFp32); }

uint16_t encode_fp16(double value) {
    return static_cast<uint16_t>(encode_bits(value, kFp16));
}

FpDecoded decode_fp(uint64_t bits, FormatKind kind) {
    switch (kind) {
        case FormatKind::FP32:
            if (bits >> 32) raise(ErrorCode::InvalidArgument, "bits exceed 32-bit width");
            return decode_fp32(static_cast<uint32_t>(bits));
        case FormatKind::FP16:
            if (bits >> 16) raise(ErrorCode::InvalidArgument, "bits exceed 16-bit width");
            return decode_fp16(static_cast<uint16_t>(bits));
        default:
            raise(ErrorCode::InvalidArgument, "decode_fp requires a floating format");
    }
}

uint64_t encode_fp(double value, FormatKind kind) {
    switch (kind) {
        case FormatKind::FP32: return encode_fp32(value);
        case FormatKind::FP16: return encode_fp16(value);
        default:
            raise(ErrorCode::InvalidArgument, "encode_fp requires a floating format");
    }
}

void QuantParams::validate(size_t axis_len) const {
    if (scales.size() != axis_len || zero_points.size() != axis_len) {
        raise(ErrorCode::InvalidQuant, "per-channel parameter count does not match axis length");
    }
    for (double s : scales) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            raise(ErrorCode::InvalidQuant, "scales must be positive and finite");
        }
    }
    if (q_min >= q_max) {
        raise(ErrorCode::InvalidQuant, "q_min must be below q_max");
    }
}

namespace {

double round_half_even(double y) {
    const double f = std::floor(y);
    const double diff = y - f;
    if (diff > 0.5) return f + 1.0;
    if (diff < 0.5) return f;
    return (std::fmod(f, 2.0) == 0.0) ? f : f + 1.0;
}

}  // namespace

int32_t quantize_value(double r, const QuantParams& p, size_t channel) {
    if (!std::isfinite(r)) {
        raise(ErrorCode::InvalidReal, "quantize requires a finite real");
    }
    const double scale = p.scales[channel];
    const double q = round_half_even(r / scale) +
                     static_cast<double>(p.zero_points[channel]);
    if (q < static_cast<double>(p.q_min)) return p.q_min;
    if (q > static_cast<double>(p.q_max)) return p.q_max;
    return static_cast<int32_t>(q);
}

double dequantize_value(int32_t q, const QuantParams& p, size_t channel) {
    if (q < p.q_min || q > p.q_max) {
        raise(ErrorCode::InvalidQuant, "quantized value outside format range");
    }
    return static_cast<double>(q - p.zero_points[channel]) * p.scales[channel];
}

std::vector<uint8_t> pack_int4(const std::vector<int32_t>& values) {
    for (int32_t v : values) {
        if (v < kInt4QMin || v > kInt4QMax) {
            raise(ErrorCode::InvalidQuant, "int4 value outside [-8, 7]");
        }
    }
    std::vector<uint8_t> bytes((values.size() + 1) / 2, 0);
    for (size_t i = 0; i < values.size(); ++i) {
        const uint8_t nibble = static_cast<uint8_t>(values[i]) & 0x0F;
        if (i % 2 == 0) {
            bytes[i / 2] |= nibble;           // low nibble first
        } else {
            bytes[i / 2] |= nibble << 4;
        }
    }
    return bytes;
}

std::vector<int32_t> unpack_int4(const uint8_t* bytes, size_t byte_len, size_t count) {
    if (count > 2 * byte_len) {
        raise(ErrorCode::OutOfBounds, "nibble count exceeds byte buffer");
    }
    std::vector<int32_t> values(count);
    for (size_t i = 0; i < count; ++i) {
        const uint8_t byte = bytes[i / 2];
        const uint8_t nibble = (i % 2 == 0) ? (byte & 0x0F) : (byte >> 4);
        values[i] = (nibble >= 8) ? static_cast<int32_t>(nibble) - 16
                                  : static_cast<int32_t>(nibble);
    }
    return values;
}

std::vector<int32_t> unpack_int4(const std::vector<uint8_t>& bytes, size_t count) {
    return unpack_int4(bytes.data(), bytes.size(), count);
}

size_t TensorMeta::num_elements() const {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    return n;
}

size_t TensorMeta::channel_of(size_t flat_index) const {
    const size_t axis = quant ? quant->axis : 0;
    size_t inner = 1;
    for (size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
    return (flat_index / inner) % shape[axis];
}

const TensorMeta& WeightStore::find(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return t;
    }
    raise(ErrorCode::UnknownTensor, "no tensor named '" + name + "'");
}

bool WeightStore::has(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return true;
    }
    return false;
}

void WeightStore::validate() const {
    size_t prev_end = 0;
    bool first = true;
    for (const auto& t : tensors) {
        if (t.shape.empty()) {
            raise(ErrorCode::ShapeMismatch, t.name + ": empty shape");
        }
        for (size_t d : t.shape) {
            if (d == 0) raise(ErrorCode::ShapeMismatch, t.name + ": zero dimension");
        }
        const size_t expect = packed_byte_length(t.format, t.num_elements());
        if (t.byte_length != expect) {
            raise(ErrorCode::ManifestMismatch,
                  t.name + ": byte_length does not match shape and format");
        }
        if (t.byte_offset + t.byte_length > blob.size()) {
            raise(ErrorCode::OutOfBounds, t.name + ": tensor range exceeds blob");
        }
        if (!first && t.byte_offset < prev_end) {
            raise(ErrorCode::ManifestMismatch,
                  t.name + ": tensors overlap or are out of order");
        }
        const bool is_int = t.format == FormatKind::INT8 || t.format == FormatKind::INT4;
        if (is_int != t.quant.has_value()) {
            raise(ErrorCode::ManifestMismatch,
                  t.name + ": quant params required exactly for integer formats");
        }
        if (t.quant) {
            if (t.quant->axis >= t.shape.size()) {
                raise(ErrorCode::InvalidQuant, t.name + ": quant axis out of range");
            }
            t.quant->validate(t.shape[t.quant->axis]);
            const int32_t lo = t.format == FormatKind::INT8 ? kInt8QMin : kInt4QMin;
            const int32_t hi = t.format == FormatKind::INT8 ? kInt8QMax : kInt4QMax;
            if (t.quant->q_min != lo || t.quant->q_max != hi) {
                raise(ErrorCode::InvalidQuant, t.name + ": clamp bounds do not match format");
            }
        }
        prev_end = t.byte_offset + t.byte_length;
        first = false;
    }
}

bool WeightStore::same_manifest(const WeightStore& a, const WeightStore& b) {
    if (a.tensors.size() != b.tensors.size()) return false;
    for (size_t i = 0; i < a.tensors.size(); ++i) {
        const auto& x = a.tensors[i];
        const auto& y = b.tensors[i];
        if (x.name != y.name || x.shape != y.shape || x.format != y.format ||
            x.byte_offset != y.byte_offset || x.byte_length != y.byte_length) {
            return false;
        }
    }
    return true;
}

namespace {

uint32_t read_u32_le(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16_le(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

std::vector<double> decode_tensor(const WeightStore& store, const std::string& name) {
    const TensorMeta& t = store.find(name);
    if (t.byte_offset + t.byte_length > store.blob.size()) {
        raise(ErrorCode::OutOfBounds, name + ": tensor range exceeds blob");
    }
    const uint8_t* base = store.blob.data() + t.byte_offset;
    const size_t n = t.num_elements();
    std::vector<double> out(n);

    switch (t.format) {
        case FormatKind::FP32:
            for (size_t i = 0; i < n; ++i) {
                out[i] = decode_fp32(read_u32_le(base + 4 * i)).value;
            }
            break;
        case FormatKind::FP16:
            for (size_t i = 0; i < n; ++i) {
                out[i] = decode_fp16(read_u16_le(base + 2 * i)).value;
            }
            break;
        case FormatKind::INT8:
            for (size_t i = 0; i < n; ++i) {
                const int32_t q = static_cast<int8_t>(base[i]);
                out[i] = dequantize_value(q, *t.quant, t.channel_of(i));
            }
            break;
        case FormatKind::INT4: {
            const auto q = unpack_int4(base, t.byte_length, n);
            for (size_t i = 0; i < n; ++i) {
                out[i] = dequantize_value(q[i], *t.quant, t.channel_of(i));
            }
            break;
        }
    }
    return out;
}

void encode_tensor(WeightStore& store, const std::string& name,
                   const std::vector<double>& weights) {
    const TensorMeta& t = store.find(name);
    if (weights.size() != t.num_elements()) {
        raise(ErrorCode::ShapeMismatch, name + ": weight count does not match shape");
    }
    if (t.byte_offset + t.byte_length > store.blob.size()) {
        raise(ErrorCode::OutOfBounds, name + ": tensor range exceeds blob");
    }
    uint8_t* base = store.blob.data() + t.byte_offset;

    switch (t.format) {
        case FormatKind::FP32:
            for (size_t i = 0; i < weights.size(); ++i) {
                const uint32_t bits = encode_fp32(weights[i]);
                base[4 * i + 0] = static_cast<uint8_t>(bits);
                base[4 * i + 1] = static_cast<uint8_t>(bits >> 8);
                base[4 * i + 2] = static_cast<uint8_t>(bits >> 16);
                base[4 * i + 3] = static_cast<uint8_t>(bits >> 24);
            }
            break;
        case FormatKind::FP16:
            for (size_t i = 0; i < weights.size(); ++i) {
                const uint16_t bits = encode_fp16(weights[i]);
                base[2 * i + 0] = static_cast<uint8_t>(bits);
                base[2 * i + 1] = static_cast<uint8_t>(bits >> 8);
            }
            break;
        case FormatKind::INT8:
            for (size_t i = 0; i < weights.size(); ++i) {
                const int32_t q = quantize_value(weights[i], *t.quant, t.channel_of(i));
                base[i] = static_cast<uint8_t>(static_cast<int8_t>(q));
            }
            break;
        case FormatKind::INT4: {
            std::vector<int32_t> q(weights.size());
            for (size_t i = 0; i < weights.size(); ++i) {
                q[i] = quantize_value(weights[i], *t.quant, t.channel_of(i));
            }
            const auto bytes = pack_int4(q);
            for (size_t i = 0; i < bytes.size(); ++i) base[i] = bytes[i];
            break;
        }
    }
}

}  // namespace emfisim
