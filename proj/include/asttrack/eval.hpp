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

// Tracking metrics (average overlap, average center error, success rate and
// success curves) and the report writer that turns run directories into CSV.

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asttrack/dataset.hpp"
#include "asttrack/geometry.hpp"
#include "asttrack/track3d.hpp"

namespace asttrack {

enum class OverlapMode { k2d, kBev, k3d };

struct OverlapSeries {
  std::vector<double> overlaps;
  // Frames scored 0 after which the pipeline reinitializes (restart on only).
  std::vector<int> restarts;

  double mean() const;
};

OverlapSeries overlap_series(std::span<const Box2D> pred, std::span<const Box2D> gt, bool restart);
OverlapSeries overlap_series(std::span<const Box3D> pred, std::span<const Box3D> gt, OverlapMode mode,
                             bool restart);

// Mean over sequences of the per-sequence mean overlap.
double ao(std::span<const OverlapSeries> sequences);

// Per-sequence mean Euclidean center distance.
double center_error(std::span<const Box2D> pred, std::span<const Box2D> gt);
double center_error(std::span<const Box3D> pred, std::span<const Box3D> gt);
// Unweighted mean of per-sequence center errors.
double ace(std::span<const double> per_sequence);

// Fraction of frames with overlap strictly above tau, per sequence, then
// averaged over sequences.
double success_rate(std::span<const OverlapSeries> sequences, double tau);

using Curve = std::vector<std::pair<double, double>>;
// Success rate at thresholds 0, 1/(n-1), ..., 1.
Curve success_curve(std::span<const OverlapSeries> sequences, int thresholds = 101);
double trapezoid_area(const Curve& curve);
std::string curve_csv(const Curve& curve);

struct SequenceScore {
  std::string sequence;
  double ao2d_raw = 0.0;
  double ao2d = 0.0;  // fused
  double ace2d_raw = 0.0;
  double ace2d = 0.0;
  double aobev = 0.0;
  double ao3d = 0.0;
  double ace3d = 0.0;
  double sr3d = 0.0;
  int restarts = 0;
  int holds = 0;
};

struct EstimatorScore {
  std::string name;
  double ao2d_raw = 0.0;
  double ao2d = 0.0;
  double ace2d_raw = 0.0;
  double ace2d = 0.0;
  double aobev = 0.0;
  double ao3d = 0.0;
  double ace3d = 0.0;
  double fps = 0.0;
  std::vector<SequenceScore> sequences;
  Curve success_2d, success_bev, success_3d;
};

// Scores <run>/<name>/<seq>/pred*.csv against the ground truth of `split`.
EstimatorScore score_estimator(const std::filesystem::path& estimator_dir, const std::string& name,
                               const std::filesystem::path& data_root, const std::string& split, bool restart);

// Reads <run>/config.json ("data", "split", "estimators", "restart") and
// writes metrics.csv, per_sequence.csv, tracker2d.csv and
// <name>/success_{2d,bev,3d}.csv. Throws kMissingData for an empty run.
std::vector<EstimatorScore> write_report(const std::filesystem::path& run_dir);

// Estimator quality on frustums cut by the ground-truth 2D boxes, which
// isolates the 3D estimator from the 2D tracker.
struct ModuleScore {
  std::string name;
  int points = 0;  // network input size, 0 for the baseline
  double ao3d = 0.0;
  double aobev = 0.0;
  double ace3d = 0.0;
  int frames = 0;
  int empty = 0;
};

ModuleScore evaluate_module(const std::vector<Sequence>& sequences, const BoxEstimator& estimator, int points,
                            double z_min, double z_max, std::uint64_t seed, int jobs);

std::string module_scores_csv(const std::vector<ModuleScore>& scores);
// points,AO3d,AObev,ACE3d rows sorted by point count (baseline rows skipped).
std::string points_sweep_csv(std::vector<ModuleScore> scores);

}  // namespace asttrack
