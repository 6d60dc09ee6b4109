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

#include "asttrack/nnet.hpp"

#include <random>

#include "asttrack/util.hpp"

namespace asttrack::nnet {

int NetworkLayout::add_stack(const std::vector<LayerSpec>& layers) {
  if (layers.empty()) fail(ErrorKind::kInvalidParameter, "a stack needs at least one layer");
  std::vector<std::size_t> offs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerSpec& spec = layers[l];
    if (spec.in < 1 || spec.out < 1) fail(ErrorKind::kInvalidParameter, "layer dimensions must be positive");
    if (l > 0 && layers[l - 1].out != spec.in) {
      fail(ErrorKind::kDimensionMismatch,
           fmt::format("layer {} expects {} inputs but the previous layer emits {}", l, spec.in,
                       layers[l - 1].out));
    }
    offs.push_back(param_count_);
    param_count_ += spec.param_count();
  }
  stacks_.push_back(layers);
  offsets_.push_back(std::move(offs));
  return static_cast<int>(stacks_.size()) - 1;
}

std::vector<float> glorot_init(const NetworkLayout& layout, std::uint64_t seed) {
  std::vector<float> params(layout.param_count(), 0.0f);
  Rng rng = make_rng(seed, "nnet.init");
  for (int s = 0; s < layout.stack_count(); ++s) {
    const auto& layers = layout.stack(s);
    for (int l = 0; l < static_cast<int>(layers.size()); ++l) {
      const LayerSpec& spec = layers[static_cast<std::size_t>(l)];
      const double limit = std::sqrt(6.0 / (spec.in + spec.out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      const std::size_t off = layout.offset(s, l);
      const std::size_t nw = static_cast<std::size_t>(spec.in) * spec.out;
      for (std::size_t i = 0; i < nw; ++i) params[off + i] = static_cast<float>(dist(rng));
    }
  }
  return params;
}

}  // namespace asttrack::nnet
