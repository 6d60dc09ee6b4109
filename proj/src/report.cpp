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

#include <algorithm>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "asttrack/errors.hpp"
#include "asttrack/eval.hpp"
#include "asttrack/util.hpp"

namespace asttrack {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) fail(ErrorKind::kEmptyInput, "median of nothing");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

EstimatorScore score_estimator(const std::filesystem::path& estimator_dir, const std::string& name,
                               const std::filesystem::path& data_root, const std::string& split, bool restart) {
  EstimatorScore score;
  score.name = name;
  std::vector<OverlapSeries> raw2d, fused2d, bev, iou3;
  std::vector<double> ace2d_raw, ace2d, ace3d;
  double tracking_ms = 0.0;
  std::size_t tracked_frames = 0;
  for (const auto& seq_dir : list_sequences(data_root, split)) {
    const std::string id = seq_dir.filename().string();
    const auto pred_dir = estimator_dir / id;
    if (!std::filesystem::exists(pred_dir / "pred3d.csv")) {
      fail(ErrorKind::kMissingData, fmt::format("{}: no trajectory for sequence {}", estimator_dir.string(), id));
    }
    const std::vector<Box2D> gt2 = read_box2d_csv(seq_dir / "anno2d.csv");
    const std::vector<Box3D> gt3 = read_box3d_csv(seq_dir / "anno3d.csv");
    const TrajectoryFiles tr = read_track_result(pred_dir);

    SequenceScore s;
    s.sequence = id;
    raw2d.push_back(overlap_series(tr.raw, gt2, restart));
    fused2d.push_back(overlap_series(tr.fused, gt2, restart));
    bev.push_back(overlap_series(tr.box3d, gt3, OverlapMode::kBev, restart));
    iou3.push_back(overlap_series(tr.box3d, gt3, OverlapMode::k3d, restart));
    s.ao2d_raw = raw2d.back().mean();
    s.ao2d = fused2d.back().mean();
    s.aobev = bev.back().mean();
    s.ao3d = iou3.back().mean();
    s.ace2d_raw = center_error(tr.raw, gt2);
    s.ace2d = center_error(tr.fused, gt2);
    s.ace3d = center_error(tr.box3d, gt3);
    s.sr3d = success_rate(std::span(&iou3.back(), 1), 0.5);
    s.restarts = static_cast<int>(iou3.back().restarts.size());
    s.holds = static_cast<int>(std::count(tr.hold.begin(), tr.hold.end(), 1));
    ace2d_raw.push_back(s.ace2d_raw);
    ace2d.push_back(s.ace2d);
    ace3d.push_back(s.ace3d);
    tracking_ms += tr.tracking_ms;
    tracked_frames += tr.box3d.empty() ? 0 : tr.box3d.size() - 1;
    score.sequences.push_back(std::move(s));
  }
  if (score.sequences.empty()) fail(ErrorKind::kMissingData, fmt::format("split '{}' has no sequences", split));
  score.ao2d_raw = ao(raw2d);
  score.ao2d = ao(fused2d);
  score.aobev = ao(bev);
  score.ao3d = ao(iou3);
  score.ace2d_raw = ace(ace2d_raw);
  score.ace2d = ace(ace2d);
  score.ace3d = ace(ace3d);
  score.fps = tracking_ms > 0.0 ? static_cast<double>(tracked_frames) / (tracking_ms / 1000.0) : 0.0;
  score.success_2d = success_curve(fused2d);
  score.success_bev = success_curve(bev);
  score.success_3d = success_curve(iou3);
  return score;
}

std::vector<EstimatorScore> write_report(const std::filesystem::path& run_dir) {
  const auto config_path = run_dir / "config.json";
  if (!std::filesystem::exists(config_path)) {
    fail(ErrorKind::kMissingData, fmt::format("{} has no config.json; nothing to report", run_dir.string()));
  }
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(read_text_file(config_path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, fmt::format("{}: {}", config_path.string(), e.what()));
  }
  if (!cfg.contains("estimators") || cfg["estimators"].empty()) {
    fail(ErrorKind::kMissingData, fmt::format("{} lists no estimator results", config_path.string()));
  }
  const std::filesystem::path data = cfg.at("data").get<std::string>();
  const std::string split = cfg.value("split", std::string("test"));
  const bool restart = cfg.value("restart", true);

  std::vector<EstimatorScore> scores;
  std::string metrics = "name,AO2d,ACE2d,AObev,AO3d,ACE3d,FPS\n";
  std::string per_seq = "name,sequence,AO2d_raw,AO2d,ACE2d_raw,ACE2d,AObev,AO3d,ACE3d,SR3d,restarts,holds\n";
  std::string tracker = "name,AO2d_raw,AO2d_fused,ACE2d_raw,ACE2d_fused,median_delta_AO2d\n";
  auto d = [](double v) { return format_double(v); };
  for (const auto& entry : cfg["estimators"]) {
    const std::string name = entry.get<std::string>();
    EstimatorScore s = score_estimator(run_dir / name, name, data, split, restart);
    metrics += fmt::format("{},{},{},{},{},{},{}\n", name, d(s.ao2d), d(s.ace2d), d(s.aobev), d(s.ao3d),
                           d(s.ace3d), d(s.fps));
    std::vector<double> delta;
    for (const SequenceScore& q : s.sequences) {
      per_seq += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", name, q.sequence, d(q.ao2d_raw), d(q.ao2d),
                             d(q.ace2d_raw), d(q.ace2d), d(q.aobev), d(q.ao3d), d(q.ace3d), d(q.sr3d), q.restarts,
                             q.holds);
      delta.push_back(q.ao2d - q.ao2d_raw);
    }
    tracker += fmt::format("{},{},{},{},{},{}\n", name, d(s.ao2d_raw), d(s.ao2d), d(s.ace2d_raw), d(s.ace2d),
                           d(median(delta)));
    write_text_file(run_dir / name / "success_2d.csv", curve_csv(s.success_2d));
    write_text_file(run_dir / name / "success_bev.csv", curve_csv(s.success_bev));
    write_text_file(run_dir / name / "success_3d.csv", curve_csv(s.success_3d));
    scores.push_back(std::move(s));
  }
  write_text_file(run_dir / "metrics.csv", metrics);
  write_text_file(run_dir / "per_sequence.csv", per_seq);
  write_text_file(run_dir / "tracker2d.csv", tracker);
  return scores;
}

}  // namespace asttrack
