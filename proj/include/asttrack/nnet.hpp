// Copyright 2026 The asttrack Authors. All Rights Reserved.
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

// A small dense-network engine: per-point shared layers, max-pooling over the
// point axis, softmax cross-entropy, Huber loss and Adam. Everything is
// templated on the scalar so the float32 training path has a float64 shadow
// for finite-difference checks.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

#include "asttrack/errors.hpp"

namespace asttrack::nnet {

template <typename T>
using Tensor2 = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

enum class Activation : std::uint8_t { kNone = 0, kRelu = 1 };

struct LayerSpec {
  int in = 0;
  int out = 0;
  Activation act = Activation::kNone;

  std::size_t param_count() const {
    return static_cast<std::size_t>(in) * static_cast<std::size_t>(out) + static_cast<std::size_t>(out);
  }
  bool operator==(const LayerSpec&) const = default;
};

// Ordered stacks of dense layers sharing one flat parameter vector. Layer l
// of a stack owns [offset, offset + in*out) for its row-major weight matrix
// followed by `out` biases.
class NetworkLayout {
 public:
  int add_stack(const std::vector<LayerSpec>& layers);

  int stack_count() const { return static_cast<int>(stacks_.size()); }
  const std::vector<LayerSpec>& stack(int s) const { return stacks_.at(static_cast<std::size_t>(s)); }
  std::size_t offset(int s, int l) const {
    return offsets_.at(static_cast<std::size_t>(s)).at(static_cast<std::size_t>(l));
  }
  std::size_t param_count() const { return param_count_; }

  bool operator==(const NetworkLayout& o) const { return stacks_ == o.stacks_; }

 private:
  std::vector<std::vector<LayerSpec>> stacks_;
  std::vector<std::vector<std::size_t>> offsets_;
  std::size_t param_count_ = 0;
};

// Uniform in +-sqrt(6 / (fan_in + fan_out)) for weights, zero biases.
std::vector<float> glorot_init(const NetworkLayout& layout, std::uint64_t seed);

// v * 0 is 0 for finite v and NaN otherwise, so the sum stays 0 exactly when
// every entry is finite. Unlike allFinite() this loop vectorizes.
template <typename T>
bool all_finite(const T* data, Eigen::Index n) {
  T acc = T(0);
  for (Eigen::Index i = 0; i < n; ++i) acc += data[i] * T(0);
  return acc == T(0);
}

template <typename T>
void require_finite(const Tensor2<T>& t, const char* what) {
  if (!all_finite(t.data(), t.size())) fail(ErrorKind::kNonFinite, fmt::format("non-finite values in {}", what));
}

template <typename T>
struct DenseCache {
  Tensor2<T> input;
  Tensor2<T> output;
  Activation act = Activation::kNone;
};

template <typename T>
using ConstWeights = Eigen::Map<const Tensor2<T>>;
template <typename T>
using ConstBias = Eigen::Map<const RowVector<T>>;

template <typename T>
ConstWeights<T> weights_of(std::span<const T> params, std::size_t offset, const LayerSpec& spec) {
  return ConstWeights<T>(params.data() + offset, spec.in, spec.out);
}
template <typename T>
ConstBias<T> bias_of(std::span<const T> params, std::size_t offset, const LayerSpec& spec) {
  return ConstBias<T>(params.data() + offset + static_cast<std::size_t>(spec.in) * spec.out, spec.out);
}

// y = act(x W + b).
template <typename T>
Tensor2<T> dense_forward(const Tensor2<T>& x, const LayerSpec& spec, std::span<const T> params,
                         std::size_t offset) {
  if (x.cols() != spec.in) {
    fail(ErrorKind::kDimensionMismatch,
         fmt::format("dense layer expects {} inputs, got {}", spec.in, x.cols()));
  }
  if (offset + spec.param_count() > params.size()) {
    fail(ErrorKind::kDimensionMismatch, "parameter vector too short for layer");
  }
  Tensor2<T> y(x.rows(), spec.out);
  y.noalias() = x * weights_of(params, offset, spec);
  y.rowwise() += bias_of(params, offset, spec);
  if (spec.act == Activation::kRelu) y = y.cwiseMax(T(0));
  require_finite(y, "dense layer output");
  return y;
}

// Backward through one layer. Accumulates dL/dW and dL/db into grad_params
// at the layer offset; returns dL/dx when need_input_grad is set.
template <typename T>
Tensor2<T> dense_backward(const Tensor2<T>& grad_out, const Tensor2<T>& input, const Tensor2<T>& output,
                          const LayerSpec& spec, std::span<const T> params, std::size_t offset,
                          std::span<T> grad_params, bool need_input_grad) {
  if (grad_out.rows() != output.rows() || grad_out.cols() != spec.out) {
    fail(ErrorKind::kDimensionMismatch, "dense backward: gradient shape mismatch");
  }
  Tensor2<T> grad_z = grad_out;
  if (spec.act == Activation::kRelu) {
    grad_z = (output.array() > T(0)).select(grad_out, T(0));
  }
  Eigen::Map<Tensor2<T>> gw(grad_params.data() + offset, spec.in, spec.out);
  gw.noalias() += input.transpose() * grad_z;
  T* gb = grad_params.data() + offset + static_cast<std::size_t>(spec.in) * spec.out;
  Eigen::Matrix<double, 1, Eigen::Dynamic> acc = Eigen::Matrix<double, 1, Eigen::Dynamic>::Zero(spec.out);
  for (Eigen::Index r = 0; r < grad_z.rows(); ++r) acc += grad_z.row(r).template cast<double>();
  for (int c = 0; c < spec.out; ++c) gb[c] += static_cast<T>(acc[c]);
  if (!need_input_grad) return {};
  Tensor2<T> grad_x(grad_z.rows(), spec.in);
  grad_x.noalias() = grad_z * weights_of(params, offset, spec).transpose();
  return grad_x;
}

template <typename T>
struct StackCache {
  Tensor2<T> input;
  std::vector<Tensor2<T>> outputs;
};

template <typename T>
Tensor2<T> stack_forward(const NetworkLayout& layout, int s, std::span<const T> params,
                         Tensor2<T> input) {
  const auto& layers = layout.stack(s);
  for (int l = 0; l < static_cast<int>(layers.size()); ++l) {
    input = dense_forward<T>(input, layers[static_cast<std::size_t>(l)], params, layout.offset(s, l));
  }
  return input;
}

// Same as stack_forward but keeps every layer output for the backward pass.
// The returned reference points into the cache.
template <typename T>
const Tensor2<T>& stack_forward(const NetworkLayout& layout, int s, std::span<const T> params,
                                Tensor2<T> input, StackCache<T>& cache) {
  const auto& layers = layout.stack(s);
  cache.input = std::move(input);
  cache.outputs.clear();
  cache.outputs.reserve(layers.size());
  for (int l = 0; l < static_cast<int>(layers.size()); ++l) {
    const Tensor2<T>& x = l == 0 ? cache.input : cache.outputs.back();
    cache.outputs.push_back(
        dense_forward<T>(x, layers[static_cast<std::size_t>(l)], params, layout.offset(s, l)));
  }
  return cache.outputs.back();
}

template <typename T>
Tensor2<T> stack_backward(const NetworkLayout& layout, int s, std::span<const T> params,
                          const StackCache<T>& cache, Tensor2<T> grad_out, std::span<T> grad_params,
                          bool need_input_grad) {
  const auto& layers = layout.stack(s);
  for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    const Tensor2<T>& in = l == 0 ? cache.input : cache.outputs[li - 1];
    const bool want_grad = l > 0 || need_input_grad;
    grad_out = dense_backward<T>(grad_out, in, cache.outputs[li], layers[li], params,
                                 layout.offset(s, l), grad_params, want_grad);
  }
  return grad_out;
}

// Column-wise max over consecutive segments of `points_per_set` rows. The
// argmax is the first row attaining the maximum.
template <typename T>
struct MaxPoolResult {
  Tensor2<T> pooled;                             // sets x d
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> argmax;  // sets x d, row within set
};

template <typename T>
MaxPoolResult<T> maxpool_points(const Tensor2<T>& features, Eigen::Index points_per_set) {
  if (points_per_set < 1 || features.rows() == 0) fail(ErrorKind::kEmptyInput, "max-pool over no points");
  if (features.rows() % points_per_set != 0) {
    fail(ErrorKind::kDimensionMismatch, "feature rows are not a multiple of the set size");
  }
  const Eigen::Index sets = features.rows() / points_per_set;
  const Eigen::Index d = features.cols();
  MaxPoolResult<T> r;
  r.pooled.resize(sets, d);
  r.argmax.resize(sets, d);
  for (Eigen::Index s = 0; s < sets; ++s) {
    const Eigen::Index base = s * points_per_set;
    for (Eigen::Index c = 0; c < d; ++c) {
      r.pooled(s, c) = features(base, c);
      r.argmax(s, c) = 0;
    }
    for (Eigen::Index p = 1; p < points_per_set; ++p) {
      const T* row = features.data() + (base + p) * d;
      for (Eigen::Index c = 0; c < d; ++c) {
        if (row[c] > r.pooled(s, c)) {
          r.pooled(s, c) = row[c];
          r.argmax(s, c) = static_cast<int>(p);
        }
      }
    }
  }
  return r;
}

// Routes each pooled gradient to its argmax row.
template <typename T>
Tensor2<T> maxpool_backward(const Tensor2<T>& grad_pooled, const MaxPoolResult<T>& pool,
                            Eigen::Index points_per_set) {
  const Eigen::Index sets = grad_pooled.rows();
  const Eigen::Index d = grad_pooled.cols();
  Tensor2<T> grad = Tensor2<T>::Zero(sets * points_per_set, d);
  for (Eigen::Index s = 0; s < sets; ++s) {
    for (Eigen::Index c = 0; c < d; ++c) {
      grad(s * points_per_set + pool.argmax(s, c), c) += grad_pooled(s, c);
    }
  }
  return grad;
}

template <typename T>
struct LossAndGrad {
  T loss = T(0);
  std::vector<T> grad;
};

// -sum y_i log softmax(logits)_i with max subtraction; gradient softmax - y.
// The label must be one-hot (exactly one 1, zeros elsewhere).
template <typename T>
LossAndGrad<T> softmax_ce(std::span<const T> logits, std::span<const T> onehot) {
  if (logits.size() != onehot.size() || logits.empty()) {
    fail(ErrorKind::kDimensionMismatch, "softmax_ce: logits and label differ in length");
  }
  std::size_t label = onehot.size();
  for (std::size_t i = 0; i < onehot.size(); ++i) {
    if (onehot[i] == T(1) && label == onehot.size()) {
      label = i;
    } else if (onehot[i] != T(0)) {
      fail(ErrorKind::kInvalidParameter, "softmax_ce: label is not one-hot");
    }
  }
  if (label == onehot.size()) fail(ErrorKind::kInvalidParameter, "softmax_ce: label is not one-hot");
  T m = logits[0];
  for (T v : logits) m = v > m ? v : m;
  double z = 0.0;
  for (T v : logits) z += std::exp(static_cast<double>(v - m));
  const double log_z = std::log(z);
  LossAndGrad<T> out;
  out.loss = static_cast<T>(log_z - static_cast<double>(logits[label] - m));
  out.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.grad[i] = static_cast<T>(std::exp(static_cast<double>(logits[i] - m) - log_z)) -
                  (i == label ? T(1) : T(0));
  }
  return out;
}

// 0.5 r^2 below delta, delta (r - 0.5 delta) above.
template <typename T>
struct HuberResult {
  T loss;
  T dloss;
};

template <typename T>
HuberResult<T> huber(T r, T delta) {
  if (r < delta) return {T(0.5) * r * r, r};
  return {delta * (r - T(0.5) * delta), delta};
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::int64_t step = 0;
};

// Bias-corrected Adam update. Throws kTrainingDivergence on a non-finite
// gradient before touching any parameter.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state, const AdamConfig& cfg) {
  if (params.size() != grads.size()) fail(ErrorKind::kDimensionMismatch, "adam: gradient size mismatch");
  for (T g : grads) {
    if (!std::isfinite(static_cast<double>(g))) {
      fail(ErrorKind::kTrainingDivergence, "adam: non-finite gradient");
    }
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), T(0));
    state.v.assign(params.size(), T(0));
    state.step = 0;
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  const T step_size = static_cast<T>(cfg.lr / bc1);
  const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const T eps = static_cast<T>(cfg.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (T(1) - b2) * g * g;
    params[i] -= step_size * state.m[i] / (std::sqrt(state.v[i]) * inv_sqrt_bc2 + eps);
  }
}

}  // namespace asttrack::nnet
