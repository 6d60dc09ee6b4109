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

// Amodal axis-aligned box estimation from a frustum point set: a center
// regression network predicts a stage-1 offset from the centroid, and a box
// network operating on the points re-centered about that estimate predicts a
// center residual, size-class scores and per-class normalized size residuals.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "asttrack/checkpoint.hpp"
#include "asttrack/geometry.hpp"
#include "asttrack/nnet.hpp"
#include "asttrack/scenegen.hpp"

namespace asttrack {

struct A3BoxConfig {
  int n_points = 1024;
  int n_size_classes = kNumSizeClasses;
  int n_shape_classes = kNumShapeClasses;
  std::vector<int> center_point_widths = {64, 128, 256};
  std::vector<int> center_head_widths = {256, 128};
  std::vector<int> box_point_widths = {128, 128, 256};
  std::vector<int> box_head_widths = {512, 256};
  bool use_category_onehot = true;

  // 3 center residuals + class scores + 3 residuals per class.
  int box_output_width() const { return 3 + 4 * n_size_classes; }
  int onehot_width() const { return use_category_onehot ? n_shape_classes : 0; }
  void validate() const;
};

nlohmann::json to_json(const A3BoxConfig& config);
A3BoxConfig a3box_config_from_json(const nlohmann::json& j);

// Stacks: 0 center per-point MLP, 1 center head, 2 box per-point MLP, 3 box head.
nnet::NetworkLayout make_a3box_layout(const A3BoxConfig& config);

template <typename T>
struct A3BoxOutput {
  Eigen::Matrix<T, 3, 1> delta_c1 = Eigen::Matrix<T, 3, 1>::Zero();
  Eigen::Matrix<T, 3, 1> delta_c2 = Eigen::Matrix<T, 3, 1>::Zero();
  std::vector<T> size_logits;
  // n_size_classes rows of (rx, ry, rz).
  Eigen::Matrix<T, Eigen::Dynamic, 3, Eigen::RowMajor> size_residuals;
};

struct BoxLabel {
  Point3 center = Point3::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Zero();
  int size_class = 0;
  // size / scale - ratio(size_class), in units of the normalization scale.
  Eigen::Vector3d size_residual = Eigen::Vector3d::Zero();
  double scale = 1.0;
};

// Builds the label for a ground-truth box whose proposal normalizes sizes by
// `scale` (the largest edge of the sampled points' enclosing box). The class
// comes from classify_size on the box itself.
BoxLabel make_box_label(const Box3D& box, double scale);

struct JointLoss {
  double total = 0.0;
  double center_net = 0.0;
  double center_res = 0.0;
  double size_cls = 0.0;
  double size_res = 0.0;
  // Gradients of `total` w.r.t. the network outputs.
  Eigen::Vector3d grad_c1 = Eigen::Vector3d::Zero();
  Eigen::Vector3d grad_c2 = Eigen::Vector3d::Zero();
  std::vector<double> grad_logits;
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> grad_residuals;
};

// L = huber(|C - (Cbar + dC1)|, 1) + huber(|C - (Cbar + dC1 + dC2)|, 2)
//   + softmax_ce(logits, class) + huber(|R - r_class|, 1)
// where R and r_class are both in units of the label scale.
JointLoss loss_joint(const A3BoxOutput<double>& output, const BoxLabel& label, const Point3& centroid);

// The network with parameters of scalar type T.
template <typename T>
class A3BoxNetwork {
 public:
  using Tensor = nnet::Tensor2<T>;

  A3BoxNetwork(A3BoxConfig config, std::vector<T> params);

  const A3BoxConfig& config() const { return config_; }
  const nnet::NetworkLayout& layout() const { return layout_; }
  std::span<const T> params() const { return params_; }
  std::span<T> mutable_params() { return params_; }

  struct Cache {
    Eigen::Index points_per_set = 0;
    nnet::StackCache<T> center_mlp, center_head, box_mlp, box_head;
    nnet::MaxPoolResult<T> center_pool, box_pool;
  };

  struct BatchOutput {
    Tensor delta_c1;  // sets x 3
    Tensor box;       // sets x box_output_width
  };

  // points: (sets * points_per_set) x 3, already centered per set.
  // onehot: sets x n_shape_classes (ignored when the config disables it).
  BatchOutput forward(const Tensor& points, Eigen::Index points_per_set, const Tensor& onehot,
                      Cache* cache) const;

  // Gradients of a scalar loss given dL/d(delta_c1) and dL/d(box outputs).
  std::vector<T> backward(const Cache& cache, const Tensor& grad_c1, const Tensor& grad_box) const;

  A3BoxOutput<T> unpack(const BatchOutput& out, Eigen::Index set) const;

 private:
  Tensor with_onehot(const Tensor& pooled, const Tensor& onehot) const;

  A3BoxConfig config_;
  nnet::NetworkLayout layout_;
  std::vector<T> params_;
};

extern template class A3BoxNetwork<float>;
extern template class A3BoxNetwork<double>;

// Exactly n points: uniform without replacement when the cloud has at least
// n points, with replacement otherwise. Deterministic per seed.
PointCloud sample_points(std::span<const Point3> cloud, int n, std::uint64_t seed);

struct NormalizedProposal {
  PointCloud points;
  Point3 centroid = Point3::Zero();
};
NormalizedProposal normalize_proposal(std::span<const Point3> points);

Eigen::Matrix<double, 1, Eigen::Dynamic> shape_onehot(ShapeClass shape, int n_shape_classes = kNumShapeClasses);

// Trained model plus inference.
class A3BoxModel {
 public:
  A3BoxModel(A3BoxConfig config, std::vector<float> params, nlohmann::json metadata = {});

  static A3BoxModel load(const std::filesystem::path& path);
  Checkpoint to_checkpoint() const;

  const A3BoxConfig& config() const { return net_.config(); }
  const A3BoxNetwork<float>& network() const { return net_; }
  const nlohmann::json& metadata() const { return metadata_; }

  struct Prediction {
    Box3D box;
    int size_class = 0;
    bool clamped = false;     // a negative edge length was clamped to 0
    Point3 centroid = Point3::Zero();
    double scale = 0.0;       // largest edge of the sampled points' box
    A3BoxOutput<float> raw;
  };

  // Samples, normalizes, runs both networks and remaps the size:
  // center = centroid + dC1 + dC2, size = (ratio_k + r_k) * scale with
  // k = argmax of the class scores (ties to the lowest id).
  Prediction predict(std::span<const Point3> frustum, ShapeClass shape, std::uint64_t seed) const;

  // Output-level remap shared by predict and the tests.
  static Box3D remap(const A3BoxOutput<float>& out, const Point3& centroid, double scale,
                     int* size_class = nullptr, bool* clamped = nullptr);

 private:
  A3BoxNetwork<float> net_;
  nlohmann::json metadata_;
};

}  // namespace asttrack
