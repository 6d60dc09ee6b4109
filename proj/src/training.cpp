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

#include "asttrack/training.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "asttrack/errors.hpp"
#include "asttrack/track3d.hpp"
#include "asttrack/util.hpp"

namespace asttrack {

void TrainConfig::validate() const {
  model.validate();
  if (epochs < 1) fail(ErrorKind::kInvalidParameter, "epochs must be positive");
  if (batch_size < 1) fail(ErrorKind::kInvalidParameter, "batch size must be positive");
  if (!(adam.lr > 0.0)) fail(ErrorKind::kInvalidParameter, "learning rate must be positive");
  if (!(box_jitter >= 0.0 && box_jitter < 1.0)) fail(ErrorKind::kInvalidParameter, "box jitter must be in [0, 1)");
  if (!(z_min > 0.0) || !(z_max >= z_min)) fail(ErrorKind::kInvalidParameter, "depth bounds are invalid");
  if (max_cached_points != 0 && max_cached_points < model.n_points) {
    fail(ErrorKind::kInvalidParameter, "max_cached_points must be 0 or at least n_points");
  }
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"model", to_json(c.model)},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"adam", {{"lr", c.adam.lr}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
          {"seed", c.seed},
          {"box_jitter", c.box_jitter},
          {"z_min", c.z_min},
          {"z_max", c.z_max},
          {"max_cached_points", c.max_cached_points}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.model = a3box_config_from_json(j.at("model"));
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  const auto& a = j.at("adam");
  c.adam = {a.at("lr").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
            a.at("eps").get<double>()};
  c.seed = j.at("seed").get<std::uint64_t>();
  c.box_jitter = j.at("box_jitter").get<double>();
  c.z_min = j.at("z_min").get<double>();
  c.z_max = j.at("z_max").get<double>();
  c.max_cached_points = j.at("max_cached_points").get<int>();
  c.validate();
  return c;
}

std::vector<TrainingSample> build_training_samples(const std::vector<Sequence>& sequences, const TrainConfig& cfg) {
  cfg.validate();
  std::vector<TrainingSample> samples;
  for (const Sequence& seq : sequences) {
    const CameraIntrinsics cam = seq.camera();
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      const SequenceFrame& frame = seq.frames[t];
      Rng rng = make_rng(cfg.seed, "train_jitter/" + seq.meta.id, t);
      std::uniform_real_distribution<double> u(-cfg.box_jitter, cfg.box_jitter);
      const Box2D& gt = frame.anno2d;
      Box2D box{gt.cx + u(rng) * gt.w, gt.cy + u(rng) * gt.h, gt.w * (1.0 + u(rng)), gt.h * (1.0 + u(rng))};
      FrustumProposal proposal = frustum_extract(frame.cloud, box, cam, cfg.z_min, cfg.z_max, static_cast<int>(t));
      if (proposal.empty()) proposal = frustum_extract(frame.cloud, gt, cam, cfg.z_min, cfg.z_max, static_cast<int>(t));
      if (proposal.empty()) continue;
      PointCloud pts = std::move(proposal.points);
      if (cfg.max_cached_points > 0 && pts.size() > static_cast<std::size_t>(cfg.max_cached_points)) {
        pts = sample_points(pts, cfg.max_cached_points, derive_seed(cfg.seed, "train_cache/" + seq.meta.id, t));
      }
      TrainingSample s;
      s.shape = seq.meta.category.shape;
      s.target = frame.anno3d;
      s.points.reserve(pts.size());
      for (const Point3& p : pts) s.points.push_back(p.cast<float>());
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

namespace {

struct PreparedSample {
  NormalizedProposal proposal;
  BoxLabel label;
  ShapeClass shape = ShapeClass::kA;
};

// Draws the network input for one sample; false when the sampled points are
// all identical and no size scale exists.
bool prepare(const TrainingSample& s, int n, std::uint64_t seed, PreparedSample& out) {
  PointCloud cloud(s.points.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) cloud[i] = s.points[i].cast<double>();
  const PointCloud sampled = sample_points(cloud, n, seed);
  const double scale = min_enclosing_box(sampled).size.maxCoeff();
  if (!(scale > 1e-9)) return false;
  out.proposal = normalize_proposal(sampled);
  out.label = make_box_label(s.target, scale);
  out.shape = s.shape;
  return true;
}

[[noreturn]] void diverged(int epoch, int step, const Error& e) {
  fail(ErrorKind::kTrainingDivergence, fmt::format("training diverged at epoch {} step {}: {}", epoch, step, e.what()));
}

}  // namespace

TrainResult train(const std::vector<TrainingSample>& samples, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (samples.empty()) fail(ErrorKind::kEmptyInput, "no training samples");
  const A3BoxConfig& mc = cfg.model;
  const nnet::NetworkLayout layout = make_a3box_layout(mc);
  A3BoxNetwork<float> net(mc, nnet::glorot_init(layout, derive_seed(cfg.seed, "init")));
  nnet::AdamState<float> adam;

  const int n = mc.n_points;
  const int k = mc.n_size_classes;
  const int width = mc.box_output_width();
  std::vector<std::size_t> order(samples.size());
  std::vector<EpochLog> log;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = make_rng(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochLog e;
    e.epoch = epoch;
    std::size_t counted = 0;
    int step = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size), ++step) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      std::vector<PreparedSample> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        PreparedSample p;
        const std::uint64_t seed =
            derive_seed(cfg.seed, "train_sample", static_cast<std::uint64_t>(epoch) * samples.size() + order[i]);
        if (prepare(samples[order[i]], n, seed, p)) batch.push_back(std::move(p));
      }
      if (batch.empty()) continue;
      const auto sets = static_cast<Eigen::Index>(batch.size());

      nnet::Tensor2<float> points(sets * n, 3);
      nnet::Tensor2<float> onehot = nnet::Tensor2<float>::Zero(sets, mc.n_shape_classes);
      for (Eigen::Index s = 0; s < sets; ++s) {
        const auto& pts = batch[static_cast<std::size_t>(s)].proposal.points;
        for (int r = 0; r < n; ++r) points.row(s * n + r) = pts[static_cast<std::size_t>(r)].cast<float>().transpose();
        onehot(s, static_cast<int>(batch[static_cast<std::size_t>(s)].shape)) = 1.0f;
      }

      try {
        A3BoxNetwork<float>::Cache cache;
        const auto out = net.forward(points, n, onehot, &cache);
        nnet::Tensor2<float> grad_c1(sets, 3);
        nnet::Tensor2<float> grad_box(sets, width);
        const double inv = 1.0 / static_cast<double>(sets);
        for (Eigen::Index s = 0; s < sets; ++s) {
          const A3BoxOutput<float> of = net.unpack(out, s);
          A3BoxOutput<double> od;
          od.delta_c1 = of.delta_c1.cast<double>();
          od.delta_c2 = of.delta_c2.cast<double>();
          od.size_logits.assign(of.size_logits.begin(), of.size_logits.end());
          od.size_residuals = of.size_residuals.cast<double>();
          const PreparedSample& p = batch[static_cast<std::size_t>(s)];
          const JointLoss L = loss_joint(od, p.label, p.proposal.centroid);
          e.loss_total += L.total;
          e.loss_c1 += L.center_net;
          e.loss_cres += L.center_res;
          e.loss_cls += L.size_cls;
          e.loss_sres += L.size_res;
          for (int c = 0; c < 3; ++c) {
            grad_c1(s, c) = static_cast<float>(L.grad_c1[c] * inv);
            grad_box(s, c) = static_cast<float>(L.grad_c2[c] * inv);
          }
          for (int i = 0; i < k; ++i) {
            grad_box(s, 3 + i) = static_cast<float>(L.grad_logits[static_cast<std::size_t>(i)] * inv);
            for (int c = 0; c < 3; ++c) grad_box(s, 3 + k + 3 * i + c) = static_cast<float>(L.grad_residuals(i, c) * inv);
          }
        }
        counted += batch.size();
        const std::vector<float> grads = net.backward(cache, grad_c1, grad_box);
        nnet::adam_step<float>(net.mutable_params(), grads, adam, cfg.adam);
      } catch (const Error& err) {
        if (err.kind() == ErrorKind::kNonFinite || err.kind() == ErrorKind::kTrainingDivergence) {
          diverged(epoch, step, err);
        }
        throw;
      }
    }
    if (counted == 0) fail(ErrorKind::kEmptyInput, "no usable training samples");
    const double inv = 1.0 / static_cast<double>(counted);
    e.loss_total *= inv;
    e.loss_c1 *= inv;
    e.loss_cres *= inv;
    e.loss_cls *= inv;
    e.loss_sres *= inv;
    log.push_back(e);
    if (on_epoch) on_epoch(e);
  }

  nlohmann::json meta = {{"training", to_json(cfg)}, {"samples", samples.size()}};
  std::vector<float> params(net.params().begin(), net.params().end());
  return {A3BoxModel(mc, std::move(params), std::move(meta)), std::move(log)};
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,loss_total,loss_c1,loss_cres,loss_cls,loss_sres\n";
  for (const EpochLog& e : log) {
    out += fmt::format("{},{},{},{},{},{}\n", e.epoch, format_double(e.loss_total), format_double(e.loss_c1),
                       format_double(e.loss_cres), format_double(e.loss_cls), format_double(e.loss_sres));
  }
  return out;
}

}  // namespace asttrack
