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

#include "emfisim/quantize.hpp"

#include <cmath>

namespace emfisim {

WeightStore quantize_store(const WeightStore& src, FormatKind target) {
    src.validate();
    for (const auto& t : src.tensors) {
        if (t.format != FormatKind::FP32) {
            raise(ErrorCode::InvalidArgument,
                  "quantize_store requires an FP32 source store");
        }
    }

    WeightStore out;
    uint64_t offset = 0;
    for (const auto& t : src.tensors) {
        const auto values = decode_tensor(src, t.name);
        for (double v : values) {
            if (!std::isfinite(v)) {
                raise(ErrorCode::InvalidReal,
                      t.name + ": source weights must be finite");
            }
        }

        TensorMeta meta;
        meta.name = t.name;
        meta.shape = t.shape;
        meta.format = target;
        meta.byte_offset = offset;
        meta.byte_length = packed_byte_length(target, t.num_elements());

        if (target == FormatKind::INT8 || target == FormatKind::INT4) {
            QuantParams qp;
            qp.axis = 0;
            qp.q_min = target == FormatKind::INT8 ? kInt8QMin : kInt4QMin;
            qp.q_max = target == FormatKind::INT8 ? kInt8QMax : kInt4QMax;
            const size_t channels = t.shape[0];
            size_t inner = 1;
            for (size_t d = 1; d < t.shape.size(); ++d) inner *= t.shape[d];
            qp.scales.resize(channels);
            qp.zero_points.assign(channels, 0);
            for (size_t c = 0; c < channels; ++c) {
                double max_abs = 0.0;
                for (size_t i = 0; i < inner; ++i) {
                    max_abs = std::max(max_abs, std::fabs(values[c * inner + i]));
                }
                qp.scales[c] = max_abs > 0.0
                                   ? max_abs / static_cast<double>(qp.q_max)
                                   : kScaleFloor;
            }
            meta.quant = qp;
        }

        out.tensors.push_back(meta);
        offset += meta.byte_length;
    }

    out.blob.assign(offset, 0);
    for (size_t i = 0; i < src.tensors.size(); ++i) {
        encode_tensor(out, out.tensors[i].name, decode_tensor(src, src.tensors[i].name));
    }
    out.validate();
    return out;
}

}  // namespace emfisim
