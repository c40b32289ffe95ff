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
#include <string>
#include <vector>

#include "emfisim/formats.hpp"

namespace emfisim {

/// Row-major tensor in working precision. All formats are decoded to 32-bit
/// floating semantics before compute; NaN and Inf pass through verbatim.
struct Tensor {
    std::vector<size_t> shape;
    std::vector<float> data;

    size_t num_elements() const {
        size_t n = 1;
        for (size_t d : shape) n *= d;
        return n;
    }
};

enum class LayerKind { Conv2D, Dense, ReLU, MaxPool2D, Flatten, Softmax };

const char* layer_kind_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);

struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    std::string weight_tensor;  // empty when the layer has no weights
    std::string bias_tensor;
    size_t kernel = 0;   // Conv2D / MaxPool2D
    size_t stride = 1;
    size_t padding = 0;  // Conv2D only, zero padding
};

struct Model {
    std::vector<LayerSpec> layers;
    WeightStore store;
    std::vector<size_t> input_shape;  // CHW
    size_t num_classes = 0;
};

struct EvalSet {
    std::vector<Tensor> images;
    std::vector<size_t> labels;
    uint64_t seed = 0;
};

/// Decoded parameter tensors, keyed by manifest name.
using WeightMap = std::map<std::string, Tensor>;

/// Decode every tensor referenced by the model's layers into working
/// precision. FP NaN/Inf survive untouched; integer weights are dequantized
/// per channel.
WeightMap load_weights(const Model& model);

/// Run the layer stack on one CHW input. Deterministic: fixed accumulation
/// order, standard float semantics (NaN propagates through sums, products,
/// ReLU and pooling; Softmax of a vector containing NaN is all-NaN).
Tensor forward(const Model& model, const WeightMap& weights, const Tensor& input);

/// Convenience wrapper that loads weights and evaluates one input.
Tensor forward(const Model& model, const Tensor& input);

/// Fraction of samples whose label ranks in the top k. Ties break toward the
/// lower class index; NaN scores rank below every number, so an all-NaN
/// output predicts classes 0..k-1.
double top_k_accuracy(const Model& model, const WeightMap& weights,
                      const EvalSet& eval, int k);

struct AccuracyPair {
    double top1 = 0.0;
    double top5 = 0.0;
};

AccuracyPair evaluate(const Model& model, const WeightMap& weights, const EvalSet& eval);

/// True when the label is among the k best scores under the tie rule above.
bool label_in_top_k(const std::vector<float>& scores, size_t label, int k);

}  // namespace emfisim
