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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "asttrack/a3boxnet.hpp"
#include "asttrack/dataset.hpp"
#include "asttrack/nnet.hpp"

namespace asttrack {

struct TrainConfig {
  A3BoxConfig model;
  int epochs = 25;
  int batch_size = 32;
  nnet::AdamConfig adam;
  std::uint64_t seed = 1;
  // Uniform relative jitter of the ground-truth 2D box (center by w/h, size
  // by itself) before frustum extraction.
  double box_jitter = 0.1;
  double z_min = 1.0;
  double z_max = 45.0;
  // Frustums are capped to this many points when cached; 0 keeps all.
  int max_cached_points = 8192;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

// A frustum proposal with its label inputs, cached once before training.
struct TrainingSample {
  std::vector<Eigen::Vector3f> points;
  ShapeClass shape = ShapeClass::kA;
  Box3D target;
};

// One sample per frame of every sequence, from jittered ground-truth boxes
// (falling back to the exact box when the jittered frustum is empty).
std::vector<TrainingSample> build_training_samples(const std::vector<Sequence>& sequences, const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double loss_total = 0.0;
  double loss_c1 = 0.0;
  double loss_cres = 0.0;
  double loss_cls = 0.0;
  double loss_sres = 0.0;
};

struct TrainResult {
  A3BoxModel model;
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Adam on the mean joint loss of each mini-batch. Single-threaded and fully
// determined by the config and the samples.
TrainResult train(const std::vector<TrainingSample>& samples, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

std::string training_log_csv(const std::vector<EpochLog>& log);

}  // namespace asttrack
