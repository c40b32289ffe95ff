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

#include "emfisim/formats.hpp"

namespace emfisim {

/// Scale used for all-zero channels so dequantization still yields exact
/// zeros without dividing by zero.
constexpr double kScaleFloor = 0x1.0p-24;

/// Convert an FP32 store into the target format. Integer targets use
/// per-channel (axis 0) symmetric quantization with S = max|w| / q_max;
/// FP16 re-encodes values with round-to-nearest-even; FP32 is an identity
/// copy. Tensor order and names are preserved, offsets are repacked.
WeightStore quantize_store(const WeightStore& src, FormatKind target);

}  // namespace emfisim
