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

// Central-difference gradient check of the joint loss through the whole
// network, in double precision. Shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "asttrack/a3boxnet.hpp"
#include "asttrack/scenegen.hpp"

namespace asttrack::test {

struct GradCheckProblem {
  A3BoxConfig config;
  std::vector<double> params;
  nnet::Tensor2<double> points;  // sets * n rows, centered per set
  Eigen::Index n = 0;
  nnet::Tensor2<double> onehot;
  std::vector<BoxLabel> labels;
  std::vector<Point3> centroids;
};

// Random clusters around random boxes, with labels whose offsets and
// residuals land on both Huber branches across the sets.
inline GradCheckProblem make_gradcheck_problem(A3BoxConfig config, int sets, int n, std::uint64_t seed,
                                               double param_scale) {
  GradCheckProblem p;
  p.config = std::move(config);
  p.config.n_points = n;
  p.n = n;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> s(1.0, 4.0);
  std::uniform_int_distribution<int> shape(0, kNumShapeClasses - 1);
  const nnet::NetworkLayout layout = make_a3box_layout(p.config);
  p.params.resize(layout.param_count());
  for (double& v : p.params) v = param_scale * u(rng);
  p.points.resize(static_cast<Eigen::Index>(sets) * n, 3);
  p.onehot = nnet::Tensor2<double>::Zero(sets, kNumShapeClasses);
  for (int set = 0; set < sets; ++set) {
    Box3D box;
    box.center = Point3(u(rng), u(rng), 10.0 + u(rng));
    box.size = Eigen::Vector3d(s(rng), s(rng), s(rng));
    PointCloud cloud;
    for (int i = 0; i < n; ++i) {
      cloud.push_back(box.center + 0.5 * box.size.cwiseProduct(Eigen::Vector3d(u(rng), u(rng), u(rng))));
    }
    const NormalizedProposal norm = normalize_proposal(cloud);
    for (int i = 0; i < n; ++i) {
      p.points.row(static_cast<Eigen::Index>(set) * n + i) = norm.points[static_cast<std::size_t>(i)].transpose();
    }
    // Shift the label so the center offset varies in magnitude per set.
    Box3D target = box;
    target.center += Point3(u(rng), u(rng), u(rng)) * (0.3 + 1.5 * set);
    p.labels.push_back(make_box_label(target, min_enclosing_box(cloud).size.maxCoeff()));
    p.centroids.push_back(norm.centroid);
    p.onehot(set, shape(rng)) = 1.0;
  }
  return p;
}

struct GradCheckEval {
  double loss = 0.0;
  std::vector<char> pattern;  // relu signs, pooling winners and Huber branches
};

inline GradCheckEval gradcheck_eval(const GradCheckProblem& p, const std::vector<double>& params,
                                    std::vector<double>* grads) {
  A3BoxNetwork<double> net(p.config, params);
  typename A3BoxNetwork<double>::Cache cache;
  const auto out = net.forward(p.points, p.n, p.onehot, &cache);
  const Eigen::Index sets = out.delta_c1.rows();
  const int k = p.config.n_size_classes;
  nnet::Tensor2<double> gc1(sets, 3), gbox(sets, p.config.box_output_width());
  GradCheckEval ev;
  for (Eigen::Index s = 0; s < sets; ++s) {
    const A3BoxOutput<double> o = net.unpack(out, s);
    const BoxLabel& label = p.labels[static_cast<std::size_t>(s)];
    const Point3& centroid = p.centroids[static_cast<std::size_t>(s)];
    const JointLoss L = loss_joint(o, label, centroid);
    ev.loss += L.total;
    const Eigen::Vector3d offset = label.center - centroid;
    ev.pattern.push_back((offset - o.delta_c1).norm() < 1.0);
    ev.pattern.push_back((offset - o.delta_c1 - o.delta_c2).norm() < 2.0);
    ev.pattern.push_back((label.size_residual - o.size_residuals.row(label.size_class).transpose()).norm() < 1.0);
    for (int c = 0; c < 3; ++c) {
      gc1(s, c) = L.grad_c1[c];
      gbox(s, c) = L.grad_c2[c];
    }
    for (int i = 0; i < k; ++i) {
      gbox(s, 3 + i) = L.grad_logits[static_cast<std::size_t>(i)];
      for (int c = 0; c < 3; ++c) gbox(s, 3 + k + 3 * i + c) = L.grad_residuals(i, c);
    }
  }
  const nnet::NetworkLayout& layout = net.layout();
  const nnet::StackCache<double>* stacks[] = {&cache.center_mlp, &cache.center_head, &cache.box_mlp,
                                              &cache.box_head};
  for (int st = 0; st < 4; ++st) {
    const auto& layers = layout.stack(st);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].act != nnet::Activation::kRelu) continue;
      const auto& y = stacks[st]->outputs[l];
      for (Eigen::Index i = 0; i < y.size(); ++i) ev.pattern.push_back(y.data()[i] > 0.0);
    }
  }
  for (const auto* pool : {&cache.center_pool, &cache.box_pool}) {
    for (Eigen::Index i = 0; i < pool->argmax.size(); ++i) ev.pattern.push_back(static_cast<char>(pool->argmax.data()[i]));
  }
  if (grads) *grads = net.backward(cache, gc1, gbox);
  return ev;
}

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_index = 0;
  std::size_t unresolved_kinks = 0;  // steps that crossed a kink at every tried h
};

// Checks the listed parameter indices (all when empty). The step shrinks
// until the +h and -h evaluations see the same activation pattern as the
// base point, so the difference never straddles a relu, pooling or Huber
// kink. Relative error uses max(|a|, |n|, floor) as the denominator.
inline GradCheckReport run_gradcheck(const GradCheckProblem& p, std::vector<std::size_t> indices,
                                     double h0 = 1e-5, double floor = 1e-6) {
  std::vector<double> analytic;
  const GradCheckEval base = gradcheck_eval(p, p.params, &analytic);
  if (indices.empty()) {
    indices.resize(p.params.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  }
  GradCheckReport rep;
  std::vector<double> q = p.params;
  for (std::size_t idx : indices) {
    double h = h0;
    double numeric = 0.0;
    bool smooth = false;
    for (int attempt = 0; attempt < 8 && !smooth; ++attempt, h *= 0.25) {
      q[idx] = p.params[idx] + h;
      const GradCheckEval up = gradcheck_eval(p, q, nullptr);
      q[idx] = p.params[idx] - h;
      const GradCheckEval down = gradcheck_eval(p, q, nullptr);
      q[idx] = p.params[idx];
      numeric = (up.loss - down.loss) / (2.0 * h);
      smooth = up.pattern == base.pattern && down.pattern == base.pattern;
    }
    if (!smooth) ++rep.unresolved_kinks;
    const double a = analytic[idx];
    const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    if (err > rep.max_rel_error) {
      rep.max_rel_error = err;
      rep.worst_index = idx;
    }
    ++rep.checked;
  }
  return rep;
}

}  // namespace asttrack::test
