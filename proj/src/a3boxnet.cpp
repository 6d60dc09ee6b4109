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

#include "asttrack/a3boxnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "asttrack/errors.hpp"
#include "asttrack/util.hpp"

namespace asttrack {

using nnet::Activation;
using nnet::LayerSpec;

void A3BoxConfig::validate() const {
  if (n_points < 8) fail(ErrorKind::kInvalidParameter, fmt::format("n_points must be >= 8, got {}", n_points));
  if (n_size_classes != default_size_taxonomy().size()) {
    fail(ErrorKind::kInvalidParameter, "n_size_classes must match the size taxonomy");
  }
  if (n_shape_classes < 1) fail(ErrorKind::kInvalidParameter, "n_shape_classes must be positive");
  for (const auto* w : {&center_point_widths, &center_head_widths, &box_point_widths, &box_head_widths}) {
    if (w->empty()) fail(ErrorKind::kInvalidParameter, "layer width lists must be nonempty");
    for (int v : *w) {
      if (v < 1) fail(ErrorKind::kInvalidParameter, "layer widths must be positive");
    }
  }
}

nlohmann::json to_json(const A3BoxConfig& c) {
  return {{"n_points", c.n_points},
          {"n_size_classes", c.n_size_classes},
          {"n_shape_classes", c.n_shape_classes},
          {"center_point_widths", c.center_point_widths},
          {"center_head_widths", c.center_head_widths},
          {"box_point_widths", c.box_point_widths},
          {"box_head_widths", c.box_head_widths},
          {"use_category_onehot", c.use_category_onehot}};
}

A3BoxConfig a3box_config_from_json(const nlohmann::json& j) {
  A3BoxConfig c;
  c.n_points = j.at("n_points").get<int>();
  c.n_size_classes = j.at("n_size_classes").get<int>();
  c.n_shape_classes = j.at("n_shape_classes").get<int>();
  c.center_point_widths = j.at("center_point_widths").get<std::vector<int>>();
  c.center_head_widths = j.at("center_head_widths").get<std::vector<int>>();
  c.box_point_widths = j.at("box_point_widths").get<std::vector<int>>();
  c.box_head_widths = j.at("box_head_widths").get<std::vector<int>>();
  c.use_category_onehot = j.at("use_category_onehot").get<bool>();
  c.validate();
  return c;
}

namespace {

std::vector<LayerSpec> mlp(int in, const std::vector<int>& widths, int final_out) {
  std::vector<LayerSpec> layers;
  for (int w : widths) {
    layers.push_back({in, w, Activation::kRelu});
    in = w;
  }
  if (final_out > 0) layers.push_back({in, final_out, Activation::kNone});
  return layers;
}

}  // namespace

nnet::NetworkLayout make_a3box_layout(const A3BoxConfig& c) {
  c.validate();
  nnet::NetworkLayout layout;
  layout.add_stack(mlp(3, c.center_point_widths, 0));
  layout.add_stack(mlp(c.center_point_widths.back() + c.onehot_width(), c.center_head_widths, 3));
  layout.add_stack(mlp(3, c.box_point_widths, 0));
  layout.add_stack(mlp(c.box_point_widths.back() + c.onehot_width(), c.box_head_widths, c.box_output_width()));
  return layout;
}

BoxLabel make_box_label(const Box3D& box, double scale) {
  if (!(scale > 0.0)) fail(ErrorKind::kDegenerateInput, "label normalization scale must be positive");
  const SizeClassification cls = classify_size(box.size);
  BoxLabel label;
  label.center = box.center;
  label.size = box.size;
  label.size_class = cls.class_id;
  label.scale = scale;
  label.size_residual = box.size / scale - default_size_taxonomy().ratio(cls.class_id);
  return label;
}

JointLoss loss_joint(const A3BoxOutput<double>& out, const BoxLabel& label, const Point3& centroid) {
  const int k = static_cast<int>(out.size_logits.size());
  if (out.size_residuals.rows() != k || label.size_class < 0 || label.size_class >= k) {
    fail(ErrorKind::kDimensionMismatch, "loss_joint: output shape does not match the label");
  }
  JointLoss L;
  L.grad_logits.assign(static_cast<std::size_t>(k), 0.0);
  L.grad_residuals = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>::Zero(k, 3);

  const Eigen::Vector3d offset = label.center - centroid;

  const Eigen::Vector3d e1 = offset - out.delta_c1;
  const double alpha = e1.norm();
  const auto h1 = nnet::huber(alpha, 1.0);
  L.center_net = h1.loss;
  if (alpha > 0.0) L.grad_c1 -= h1.dloss * e1 / alpha;

  const Eigen::Vector3d e2 = offset - out.delta_c1 - out.delta_c2;
  const double beta = e2.norm();
  const auto h2 = nnet::huber(beta, 2.0);
  L.center_res = h2.loss;
  if (beta > 0.0) {
    L.grad_c1 -= h2.dloss * e2 / beta;
    L.grad_c2 -= h2.dloss * e2 / beta;
  }

  std::vector<double> onehot(static_cast<std::size_t>(k), 0.0);
  onehot[static_cast<std::size_t>(label.size_class)] = 1.0;
  const auto ce = nnet::softmax_ce<double>(out.size_logits, onehot);
  L.size_cls = ce.loss;
  L.grad_logits = ce.grad;

  const Eigen::Vector3d e3 = label.size_residual - out.size_residuals.row(label.size_class).transpose();
  const double gamma = e3.norm();
  const auto h3 = nnet::huber(gamma, 1.0);
  L.size_res = h3.loss;
  if (gamma > 0.0) L.grad_residuals.row(label.size_class) = (-h3.dloss * e3 / gamma).transpose();

  L.total = L.center_net + L.center_res + L.size_cls + L.size_res;
  if (!std::isfinite(L.total)) fail(ErrorKind::kNonFinite, "joint loss is not finite");
  return L;
}

template <typename T>
A3BoxNetwork<T>::A3BoxNetwork(A3BoxConfig config, std::vector<T> params)
    : config_(std::move(config)), layout_(make_a3box_layout(config_)), params_(std::move(params)) {
  if (params_.size() != layout_.param_count()) {
    fail(ErrorKind::kDimensionMismatch,
         fmt::format("A3BoxNet expects {} parameters, got {}", layout_.param_count(), params_.size()));
  }
}

template <typename T>
typename A3BoxNetwork<T>::Tensor A3BoxNetwork<T>::with_onehot(const Tensor& pooled, const Tensor& onehot) const {
  if (!config_.use_category_onehot) return pooled;
  if (onehot.rows() != pooled.rows() || onehot.cols() != config_.n_shape_classes) {
    fail(ErrorKind::kDimensionMismatch, "category one-hot has the wrong shape");
  }
  Tensor h(pooled.rows(), pooled.cols() + onehot.cols());
  h << pooled, onehot;
  return h;
}

template <typename T>
typename A3BoxNetwork<T>::BatchOutput A3BoxNetwork<T>::forward(const Tensor& points, Eigen::Index n,
                                                              const Tensor& onehot, Cache* cache) const {
  if (points.cols() != 3 || n < 1 || points.rows() % n != 0 || points.rows() == 0) {
    fail(ErrorKind::kDimensionMismatch, "A3BoxNet input must be (sets * n) x 3");
  }
  const Eigen::Index sets = points.rows() / n;
  const std::span<const T> p = params_;
  BatchOutput out;

  nnet::MaxPoolResult<T> pool1 = cache
      ? nnet::maxpool_points<T>(nnet::stack_forward<T>(layout_, 0, p, points, cache->center_mlp), n)
      : nnet::maxpool_points<T>(nnet::stack_forward<T>(layout_, 0, p, points), n);
  Tensor h1 = with_onehot(pool1.pooled, onehot);
  out.delta_c1 = cache ? nnet::stack_forward<T>(layout_, 1, p, std::move(h1), cache->center_head)
                       : nnet::stack_forward<T>(layout_, 1, p, std::move(h1));

  Tensor shifted = points;
  for (Eigen::Index s = 0; s < sets; ++s) {
    shifted.middleRows(s * n, n).rowwise() -= out.delta_c1.row(s);
  }
  nnet::MaxPoolResult<T> pool2 = cache
      ? nnet::maxpool_points<T>(nnet::stack_forward<T>(layout_, 2, p, std::move(shifted), cache->box_mlp), n)
      : nnet::maxpool_points<T>(nnet::stack_forward<T>(layout_, 2, p, std::move(shifted)), n);
  Tensor h2 = with_onehot(pool2.pooled, onehot);
  out.box = cache ? nnet::stack_forward<T>(layout_, 3, p, std::move(h2), cache->box_head)
                  : nnet::stack_forward<T>(layout_, 3, p, std::move(h2));
  if (cache) {
    cache->points_per_set = n;
    cache->center_pool = std::move(pool1);
    cache->box_pool = std::move(pool2);
  }
  return out;
}

template <typename T>
std::vector<T> A3BoxNetwork<T>::backward(const Cache& cache, const Tensor& grad_c1, const Tensor& grad_box) const {
  const Eigen::Index n = cache.points_per_set;
  const std::span<const T> p = params_;
  std::vector<T> grads(params_.size(), T(0));
  const std::span<T> g = grads;

  const Eigen::Index f2 = config_.box_point_widths.back();
  const Tensor gh2 = nnet::stack_backward<T>(layout_, 3, p, cache.box_head, grad_box, g, true);
  const Tensor gf2 = nnet::maxpool_backward<T>(gh2.leftCols(f2), cache.box_pool, n);
  const Tensor gx2 = nnet::stack_backward<T>(layout_, 2, p, cache.box_mlp, gf2, g, true);

  // The box network sees points - dC1, so dC1 collects minus the summed
  // input gradient of its set.
  Tensor gc1 = grad_c1;
  const Eigen::Index sets = gc1.rows();
  for (Eigen::Index s = 0; s < sets; ++s) {
    for (int c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (Eigen::Index r = 0; r < n; ++r) acc += static_cast<double>(gx2(s * n + r, c));
      gc1(s, c) -= static_cast<T>(acc);
    }
  }

  const Eigen::Index f1 = config_.center_point_widths.back();
  const Tensor gh1 = nnet::stack_backward<T>(layout_, 1, p, cache.center_head, gc1, g, true);
  const Tensor gf1 = nnet::maxpool_backward<T>(gh1.leftCols(f1), cache.center_pool, n);
  nnet::stack_backward<T>(layout_, 0, p, cache.center_mlp, gf1, g, false);
  return grads;
}

template <typename T>
A3BoxOutput<T> A3BoxNetwork<T>::unpack(const BatchOutput& out, Eigen::Index s) const {
  const int k = config_.n_size_classes;
  A3BoxOutput<T> o;
  o.delta_c1 = out.delta_c1.row(s).transpose();
  o.delta_c2 = out.box.row(s).segment(0, 3).transpose();
  o.size_logits.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) o.size_logits[static_cast<std::size_t>(i)] = out.box(s, 3 + i);
  o.size_residuals.resize(k, 3);
  for (int i = 0; i < k; ++i) {
    for (int c = 0; c < 3; ++c) o.size_residuals(i, c) = out.box(s, 3 + k + 3 * i + c);
  }
  return o;
}

template class A3BoxNetwork<float>;
template class A3BoxNetwork<double>;

PointCloud sample_points(std::span<const Point3> cloud, int n, std::uint64_t seed) {
  if (cloud.empty()) fail(ErrorKind::kEmptyInput, "cannot sample from an empty cloud");
  if (n < 1) fail(ErrorKind::kInvalidParameter, "sample size must be positive");
  Rng rng = make_rng(seed, "sample_points");
  PointCloud out;
  out.reserve(static_cast<std::size_t>(n));
  const std::size_t size = cloud.size();
  if (size >= static_cast<std::size_t>(n)) {
    std::vector<std::size_t> idx(size);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, size - 1);
      std::swap(idx[i], idx[pick(rng)]);
      out.push_back(cloud[idx[i]]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, size - 1);
    for (int i = 0; i < n; ++i) out.push_back(cloud[pick(rng)]);
  }
  return out;
}

NormalizedProposal normalize_proposal(std::span<const Point3> points) {
  if (points.empty()) fail(ErrorKind::kEmptyInput, "cannot normalize an empty proposal");
  NormalizedProposal out;
  for (const Point3& p : points) out.centroid += p;
  out.centroid /= static_cast<double>(points.size());
  out.points.reserve(points.size());
  for (const Point3& p : points) out.points.push_back(p - out.centroid);
  return out;
}

Eigen::Matrix<double, 1, Eigen::Dynamic> shape_onehot(ShapeClass shape, int n_shape_classes) {
  const int idx = static_cast<int>(shape);
  if (idx < 0 || idx >= n_shape_classes) fail(ErrorKind::kInvalidParameter, "shape class out of range");
  Eigen::Matrix<double, 1, Eigen::Dynamic> v = Eigen::Matrix<double, 1, Eigen::Dynamic>::Zero(n_shape_classes);
  v(idx) = 1.0;
  return v;
}

A3BoxModel::A3BoxModel(A3BoxConfig config, std::vector<float> params, nlohmann::json metadata)
    : net_(std::move(config), std::move(params)), metadata_(std::move(metadata)) {
  if (metadata_.is_null()) metadata_ = nlohmann::json::object();
}

A3BoxModel A3BoxModel::load(const std::filesystem::path& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (!ckpt.metadata.contains("a3box")) fail(ErrorKind::kFormat, "checkpoint has no A3BoxNet config");
  A3BoxConfig config = a3box_config_from_json(ckpt.metadata.at("a3box"));
  if (!(make_a3box_layout(config) == ckpt.layout)) {
    fail(ErrorKind::kFormat, "checkpoint layer specs do not match its A3BoxNet config");
  }
  return A3BoxModel(std::move(config), std::move(ckpt.params), std::move(ckpt.metadata));
}

Checkpoint A3BoxModel::to_checkpoint() const {
  Checkpoint ckpt;
  ckpt.layout = net_.layout();
  ckpt.params.assign(net_.params().begin(), net_.params().end());
  ckpt.metadata = metadata_;
  ckpt.metadata["a3box"] = to_json(net_.config());
  return ckpt;
}

Box3D A3BoxModel::remap(const A3BoxOutput<float>& out, const Point3& centroid, double scale,
                        int* size_class, bool* clamped) {
  const auto& logits = out.size_logits;
  const auto k = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  Box3D box;
  box.center = centroid + out.delta_c1.cast<double>() + out.delta_c2.cast<double>();
  box.size = (default_size_taxonomy().ratio(k) + out.size_residuals.row(k).transpose().cast<double>()) * scale;
  bool any_clamped = false;
  for (int c = 0; c < 3; ++c) {
    if (box.size[c] < 0.0) {
      box.size[c] = 0.0;
      any_clamped = true;
    }
  }
  if (size_class) *size_class = k;
  if (clamped) *clamped = any_clamped;
  return box;
}

A3BoxModel::Prediction A3BoxModel::predict(std::span<const Point3> frustum, ShapeClass shape,
                                           std::uint64_t seed) const {
  const A3BoxConfig& cfg = config();
  const PointCloud sampled = sample_points(frustum, cfg.n_points, seed);
  const NormalizedProposal norm = normalize_proposal(sampled);

  nnet::Tensor2<float> pts(cfg.n_points, 3);
  for (int i = 0; i < cfg.n_points; ++i) pts.row(i) = norm.points[static_cast<std::size_t>(i)].cast<float>().transpose();
  nnet::Tensor2<float> onehot(1, cfg.n_shape_classes);
  onehot.row(0) = shape_onehot(shape, cfg.n_shape_classes).cast<float>();

  const auto out = net_.forward(pts, cfg.n_points, onehot, nullptr);
  Prediction pred;
  pred.raw = net_.unpack(out, 0);
  pred.centroid = norm.centroid;
  pred.scale = min_enclosing_box(sampled).size.maxCoeff();
  pred.box = remap(pred.raw, pred.centroid, pred.scale, &pred.size_class, &pred.clamped);
  return pred;
}

}  // namespace asttrack
