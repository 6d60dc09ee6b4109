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

#include "asttrack/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "asttrack/errors.hpp"
#include "asttrack/util.hpp"

namespace asttrack {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) fail(ErrorKind::kDimensionMismatch, fmt::format("prediction has {} frames, ground truth {}", a, b));
}

OverlapSeries finish(std::vector<double> overlaps, bool restart) {
  OverlapSeries s;
  s.overlaps = std::move(overlaps);
  if (restart) {
    for (std::size_t t = 0; t < s.overlaps.size(); ++t) {
      if (s.overlaps[t] == 0.0) s.restarts.push_back(static_cast<int>(t));
    }
  }
  return s;
}

void require_sequences(std::size_t n) {
  if (n == 0) fail(ErrorKind::kEmptyInput, "no sequences to aggregate");
}

}  // namespace

double OverlapSeries::mean() const {
  if (overlaps.empty()) fail(ErrorKind::kEmptyInput, "overlap series is empty");
  return std::accumulate(overlaps.begin(), overlaps.end(), 0.0) / static_cast<double>(overlaps.size());
}

OverlapSeries overlap_series(std::span<const Box2D> pred, std::span<const Box2D> gt, bool restart) {
  check_lengths(pred.size(), gt.size());
  std::vector<double> o(pred.size());
  for (std::size_t t = 0; t < pred.size(); ++t) o[t] = iou2d(pred[t], gt[t]);
  return finish(std::move(o), restart);
}

OverlapSeries overlap_series(std::span<const Box3D> pred, std::span<const Box3D> gt, OverlapMode mode,
                             bool restart) {
  check_lengths(pred.size(), gt.size());
  if (mode == OverlapMode::k2d) fail(ErrorKind::kInvalidParameter, "2d overlap needs 2D boxes");
  std::vector<double> o(pred.size());
  for (std::size_t t = 0; t < pred.size(); ++t) {
    o[t] = mode == OverlapMode::k3d ? iou3d(pred[t], gt[t]) : iou_bev(pred[t], gt[t]);
  }
  return finish(std::move(o), restart);
}

double ao(std::span<const OverlapSeries> sequences) {
  require_sequences(sequences.size());
  double sum = 0.0;
  for (const OverlapSeries& s : sequences) sum += s.mean();
  return sum / static_cast<double>(sequences.size());
}

double center_error(std::span<const Box2D> pred, std::span<const Box2D> gt) {
  check_lengths(pred.size(), gt.size());
  if (pred.empty()) fail(ErrorKind::kEmptyInput, "trajectory is empty");
  double sum = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) sum += std::hypot(pred[t].cx - gt[t].cx, pred[t].cy - gt[t].cy);
  return sum / static_cast<double>(pred.size());
}

double center_error(std::span<const Box3D> pred, std::span<const Box3D> gt) {
  check_lengths(pred.size(), gt.size());
  if (pred.empty()) fail(ErrorKind::kEmptyInput, "trajectory is empty");
  double sum = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) sum += (pred[t].center - gt[t].center).norm();
  return sum / static_cast<double>(pred.size());
}

double ace(std::span<const double> per_sequence) {
  require_sequences(per_sequence.size());
  return std::accumulate(per_sequence.begin(), per_sequence.end(), 0.0) / static_cast<double>(per_sequence.size());
}

double success_rate(std::span<const OverlapSeries> sequences, double tau) {
  require_sequences(sequences.size());
  double sum = 0.0;
  for (const OverlapSeries& s : sequences) {
    if (s.overlaps.empty()) fail(ErrorKind::kEmptyInput, "overlap series is empty");
    const auto hits = std::count_if(s.overlaps.begin(), s.overlaps.end(), [tau](double o) { return o > tau; });
    sum += static_cast<double>(hits) / static_cast<double>(s.overlaps.size());
  }
  return sum / static_cast<double>(sequences.size());
}

Curve success_curve(std::span<const OverlapSeries> sequences, int thresholds) {
  if (thresholds < 2) fail(ErrorKind::kInvalidParameter, "a success curve needs at least 2 thresholds");
  Curve curve;
  curve.reserve(static_cast<std::size_t>(thresholds));
  for (int i = 0; i < thresholds; ++i) {
    const double tau = static_cast<double>(i) / (thresholds - 1);
    curve.emplace_back(tau, success_rate(sequences, tau));
  }
  return curve;
}

double trapezoid_area(const Curve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += 0.5 * (curve[i].second + curve[i - 1].second) * (curve[i].first - curve[i - 1].first);
  }
  return area;
}

std::string curve_csv(const Curve& curve) {
  std::string out = "threshold,success_rate\n";
  for (const auto& [tau, sr] : curve) out += fmt::format("{},{}\n", format_double(tau), format_double(sr));
  return out;
}

ModuleScore evaluate_module(const std::vector<Sequence>& sequences, const BoxEstimator& estimator, int points,
                            double z_min, double z_max, std::uint64_t seed, int jobs) {
  require_sequences(sequences.size());
  struct PerSequence {
    OverlapSeries iou3, bev;
    double ace = 0.0;
    int frames = 0, empty = 0;
  };
  std::vector<PerSequence> per(sequences.size());
  parallel_for(sequences.size(), jobs, [&](std::size_t i) {
    const Sequence& seq = sequences[i];
    const CameraIntrinsics cam = seq.camera();
    PerSequence& out = per[i];
    double err = 0.0;
    int scored = 0;
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      const SequenceFrame& f = seq.frames[t];
      const FrustumProposal p = frustum_extract(f.cloud, f.anno2d, cam, z_min, z_max, static_cast<int>(t));
      ++out.frames;
      if (p.empty()) {
        ++out.empty;
        out.iou3.overlaps.push_back(0.0);
        out.bev.overlaps.push_back(0.0);
        continue;
      }
      const Box3D box = estimator.estimate(p.points, seq.meta.category.shape,
                                           derive_seed(seed, "module/" + seq.meta.id, t));
      out.iou3.overlaps.push_back(iou3d(box, f.anno3d));
      out.bev.overlaps.push_back(iou_bev(box, f.anno3d));
      err += (box.center - f.anno3d.center).norm();
      ++scored;
    }
    out.ace = scored > 0 ? err / scored : 0.0;
  });

  ModuleScore score;
  score.name = estimator.name();
  score.points = points;
  std::vector<OverlapSeries> iou3, bev;
  std::vector<double> errs;
  for (const PerSequence& p : per) {
    iou3.push_back(p.iou3);
    bev.push_back(p.bev);
    errs.push_back(p.ace);
    score.frames += p.frames;
    score.empty += p.empty;
  }
  score.ao3d = ao(iou3);
  score.aobev = ao(bev);
  score.ace3d = ace(errs);
  return score;
}

std::string module_scores_csv(const std::vector<ModuleScore>& scores) {
  std::string out = "name,points,AO3d,AObev,ACE3d,frames,empty\n";
  for (const ModuleScore& s : scores) {
    out += fmt::format("{},{},{},{},{},{},{}\n", s.name, s.points, format_double(s.ao3d), format_double(s.aobev),
                       format_double(s.ace3d), s.frames, s.empty);
  }
  return out;
}

std::string points_sweep_csv(std::vector<ModuleScore> scores) {
  std::stable_sort(scores.begin(), scores.end(),
                   [](const ModuleScore& a, const ModuleScore& b) { return a.points < b.points; });
  std::string out = "points,AO3d,AObev,ACE3d\n";
  for (const ModuleScore& s : scores) {
    if (s.points <= 0) continue;
    out += fmt::format("{},{},{},{}\n", s.points, format_double(s.ao3d), format_double(s.aobev),
                       format_double(s.ace3d));
  }
  return out;
}

}  // namespace asttrack
