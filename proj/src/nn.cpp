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

#include "emfisim/nn.hpp"

#include <cmath>
#include <limits>

namespace emfisim {

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv2D: return "conv2d";
        case LayerKind::Dense: return "dense";
        case LayerKind::ReLU: return "relu";
        case LayerKind::MaxPool2D: return "maxpool2d";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Softmax: return "softmax";
    }
    return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
    if (name == "conv2d") return LayerKind::Conv2D;
    if (name == "dense") return LayerKind::Dense;
    if (name == "relu") return LayerKind::ReLU;
    if (name == "maxpool2d") return LayerKind::MaxPool2D;
    if (name == "flatten") return LayerKind::Flatten;
    if (name == "softmax") return LayerKind::Softmax;
    raise(ErrorCode::InvalidArgument, "unknown layer kind '" + name + "'");
}

WeightMap load_weights(const Model& model) {
    WeightMap weights;
    for (const auto& layer : model.layers) {
        for (const std::string& name : {layer.weight_tensor, layer.bias_tensor}) {
            if (name.empty() || weights.count(name)) continue;
            const TensorMeta& meta = model.store.find(name);
            const auto values = decode_tensor(model.store, name);
            Tensor t;
            t.shape = meta.shape;
            t.data.reserve(values.size());
            for (double v : values) t.data.push_back(static_cast<float>(v));
            weights.emplace(name, std::move(t));
        }
    }
    return weights;
}

namespace {

const Tensor& weight_or_throw(const WeightMap& weights, const std::string& name) {
    auto it = weights.find(name);
    if (it == weights.end()) {
        raise(ErrorCode::UnknownTensor, "weights for '" + name + "' not loaded");
    }
    return it->second;
}

// ReLU that lets NaN through; std::max would swallow it.
inline float relu(float v) {
    if (std::isnan(v)) return v;
    return v > 0.0f ? v : 0.0f;
}

Tensor conv2d(const Tensor& in, const Tensor& w, const Tensor* bias,
              size_t stride, size_t padding) {
    if (in.shape.size() != 3 || w.shape.size() != 4 || in.shape[0] != w.shape[1]) {
        raise(ErrorCode::ShapeMismatch, "conv2d expects CHW input and OIHW weights");
    }
    const size_t in_c = in.shape[0], in_h = in.shape[1], in_w = in.shape[2];
    const size_t out_c = w.shape[0], k_h = w.shape[2], k_w = w.shape[3];
    if (in_h + 2 * padding < k_h || in_w + 2 * padding < k_w) {
        raise(ErrorCode::ShapeMismatch, "conv2d kernel larger than padded input");
    }
    const size_t out_h = (in_h + 2 * padding - k_h) / stride + 1;
    const size_t out_w = (in_w + 2 * padding - k_w) / stride + 1;

    Tensor out;
    out.shape = {out_c, out_h, out_w};
    out.data.resize(out_c * out_h * out_w);

    for (size_t oc = 0; oc < out_c; ++oc) {
        for (size_t oy = 0; oy < out_h; ++oy) {
            for (size_t ox = 0; ox < out_w; ++ox) {
                float acc = bias ? bias->data[oc] : 0.0f;
                for (size_t ky = 0; ky < k_h; ++ky) {
                    for (size_t kx = 0; kx < k_w; ++kx) {
                        const long y = static_cast<long>(oy * stride + ky) -
                                       static_cast<long>(padding);
                        const long x = static_cast<long>(ox * stride + kx) -
                                       static_cast<long>(padding);
                        if (y < 0 || x < 0 || y >= static_cast<long>(in_h) ||
                            x >= static_cast<long>(in_w)) {
                            continue;  // zero padding contributes nothing
                        }
                        for (size_t ic = 0; ic < in_c; ++ic) {
                            const float xv = in.data[(ic * in_h + y) * in_w + x];
                            const float wv =
                                w.data[((oc * in_c + ic) * k_h + ky) * k_w + kx];
                            acc += wv * xv;
                        }
                    }
                }
                out.data[(oc * out_h + oy) * out_w + ox] = acc;
            }
        }
    }
    return out;
}

Tensor dense(const Tensor& in, const Tensor& w, const Tensor* bias) {
    if (w.shape.size() != 2 || in.num_elements() != w.shape[1]) {
        raise(ErrorCode::ShapeMismatch, "dense weight shape does not match input length");
    }
    const size_t out_n = w.shape[0], in_n = w.shape[1];
    Tensor out;
    out.shape = {out_n};
    out.data.resize(out_n);
    for (size_t o = 0; o < out_n; ++o) {
        float acc = bias ? bias->data[o] : 0.0f;
        for (size_t i = 0; i < in_n; ++i) {
            acc += w.data[o * in_n + i] * in.data[i];
        }
        out.data[o] = acc;
    }
    return out;
}

Tensor maxpool2d(const Tensor& in, size_t kernel, size_t stride) {
    if (in.shape.size() != 3) {
        raise(ErrorCode::ShapeMismatch, "maxpool2d expects CHW input");
    }
    const size_t c = in.shape[0], in_h = in.shape[1], in_w = in.shape[2];
    if (kernel == 0 || kernel > in_h || kernel > in_w) {
        raise(ErrorCode::ShapeMismatch, "pool kernel larger than input");
    }
    const size_t out_h = (in_h - kernel) / stride + 1;
    const size_t out_w = (in_w - kernel) / stride + 1;
    Tensor out;
    out.shape = {c, out_h, out_w};
    out.data.resize(c * out_h * out_w);
    for (size_t ch = 0; ch < c; ++ch) {
        for (size_t oy = 0; oy < out_h; ++oy) {
            for (size_t ox = 0; ox < out_w; ++ox) {
                float best = -std::numeric_limits<float>::infinity();
                bool poisoned = false;
                for (size_t ky = 0; ky < kernel && !poisoned; ++ky) {
                    for (size_t kx = 0; kx < kernel; ++kx) {
                        const float v =
                            in.data[(ch * in_h + oy * stride + ky) * in_w + ox * stride + kx];
                        if (std::isnan(v)) {
                            best = v;  // NaN anywhere in the window wins
                            poisoned = true;
                            break;
                        }
                        if (v > best) best = v;
                    }
                }
                out.data[(ch * out_h + oy) * out_w + ox] = best;
            }
        }
    }
    return out;
}

Tensor softmax(const Tensor& in) {
    Tensor out;
    out.shape = in.shape;
    out.data.resize(in.data.size());
    for (float v : in.data) {
        if (std::isnan(v)) {
            for (auto& o : out.data) o = std::numeric_limits<float>::quiet_NaN();
            return out;
        }
    }
    float max_v = -std::numeric_limits<float>::infinity();
    for (float v : in.data) max_v = v > max_v ? v : max_v;
    float sum = 0.0f;
    for (size_t i = 0; i < in.data.size(); ++i) {
        out.data[i] = std::exp(in.data[i] - max_v);
        sum += out.data[i];
    }
    for (auto& o : out.data) o /= sum;
    return out;
}

}  // namespace

Tensor forward(const Model& model, const WeightMap& weights, const Tensor& input) {
    if (input.shape != model.input_shape) {
        raise(ErrorCode::ShapeMismatch, "input shape does not match model");
    }
    Tensor cur = input;
    for (const auto& layer : model.layers) {
        switch (layer.kind) {
            case LayerKind::Conv2D: {
                const Tensor& w = weight_or_throw(weights, layer.weight_tensor);
                const Tensor* b = layer.bias_tensor.empty()
                                      ? nullptr
                                      : &weight_or_throw(weights, layer.bias_tensor);
                cur = conv2d(cur, w, b, layer.stride, layer.padding);
                break;
            }
            case LayerKind::Dense: {
                const Tensor& w = weight_or_throw(weights, layer.weight_tensor);
                const Tensor* b = layer.bias_tensor.empty()
                                      ? nullptr
                                      : &weight_or_throw(weights, layer.bias_tensor);
                cur = dense(cur, w, b);
                break;
            }
            case LayerKind::ReLU:
                for (auto& v : cur.data) v = relu(v);
                break;
            case LayerKind::MaxPool2D:
                cur = maxpool2d(cur, layer.kernel, layer.stride);
                break;
            case LayerKind::Flatten:
                cur.shape = {cur.num_elements()};
                break;
            case LayerKind::Softmax:
                cur = softmax(cur);
                break;
        }
    }
    if (cur.num_elements() != model.num_classes) {
        raise(ErrorCode::ShapeMismatch, "output length does not match num_classes");
    }
    return cur;
}

Tensor forward(const Model& model, const Tensor& input) {
    const WeightMap weights = load_weights(model);
    return forward(model, weights, input);
}

bool label_in_top_k(const std::vector<float>& scores, size_t label, int k) {
    // label ranks above class j when its score is greater, or on a tie (or
    // mutual NaN) when its index is lower. NaN sits below every number.
    const float s = scores[label];
    const bool s_nan = std::isnan(s);
    int better = 0;
    for (size_t j = 0; j < scores.size(); ++j) {
        if (j == label) continue;
        const float t = scores[j];
        const bool t_nan = std::isnan(t);
        bool j_wins;
        if (s_nan != t_nan) {
            j_wins = s_nan;  // the NaN side loses
        } else if (s_nan) {
            j_wins = j < label;  // both NaN: lower index first
        } else if (t != s) {
            j_wins = t > s;
        } else {
            j_wins = j < label;
        }
        if (j_wins) ++better;
    }
    return better < k;
}

double top_k_accuracy(const Model& model, const WeightMap& weights,
                      const EvalSet& eval, int k) {
    if (eval.images.empty() || eval.images.size() != eval.labels.size()) {
        raise(ErrorCode::LengthMismatch, "eval set images/labels mismatch");
    }
    size_t hits = 0;
    for (size_t i = 0; i < eval.images.size(); ++i) {
        const Tensor scores = forward(model, weights, eval.images[i]);
        if (eval.labels[i] >= scores.data.size()) {
            raise(ErrorCode::OutOfBounds, "label exceeds class count");
        }
        if (label_in_top_k(scores.data, eval.labels[i], k)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(eval.images.size());
}

AccuracyPair evaluate(const Model& model, const WeightMap& weights, const EvalSet& eval) {
    if (eval.images.empty() || eval.images.size() != eval.labels.size()) {
        raise(ErrorCode::LengthMismatch, "eval set images/labels mismatch");
    }
    AccuracyPair acc;
    size_t hits1 = 0, hits5 = 0;
    for (size_t i = 0; i < eval.images.size(); ++i) {
        const Tensor scores = forward(model, weights, eval.images[i]);
        if (eval.labels[i] >= scores.data.size()) {
            raise(ErrorCode::OutOfBounds, "label exceeds class count");
        }
        if (label_in_top_k(scores.data, eval.labels[i], 1)) ++hits1;
        if (label_in_top_k(scores.data, eval.labels[i], 5)) ++hits5;
    }
    const double n = static_cast<double>(eval.images.size());
    acc.top1 = hits1 / n;
    acc.top5 = hits5 / n;
    return acc;
}

}  // namespace emfisim
