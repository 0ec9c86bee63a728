#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "pflow/detect.hpp"
#include "pflow/pipeline.hpp"
#include "pflow/providers.hpp"
#include "pflow/scene.hpp"
#include "pflow/track.hpp"

namespace pflow {

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PRCurve {
  std::vector<PRPoint> points;       // one per prediction, in ranked order
  std::vector<bool> true_positive;   // per ranked prediction
  std::size_t truth_count = 0;
  double ap = 0.0;
};

// Predictions ranked by confidence (ties: frame, then detection index); each
// claims the highest-IoU unclaimed truth box of its frame with IoU >= iou_min.
// AP is the exact step area sum(delta recall * precision) at every recall step.
PRCurve pr_curve(const DetectionTable& predictions, const DetectionTable& truth, double iou_min = 0.5);

void write_pr_curve(std::ostream& out, const PRCurve& curve);

using TrackObservations = std::map<FrameIndex, std::vector<TrackBox>>;

TrackObservations observations_from_events(std::span<const TrackEvent> events);
TrackObservations observations_from_frames(std::span<const FrameOutput> frames);

struct IdSwitchReport {
  std::size_t switches = 0;
  std::map<int, std::size_t> per_agent;  // agent id -> switches
  std::size_t distinct_track_ids = 0;    // over all observations
};

// A switch is a frame where an agent's best-overlapping track (IoU >= min_iou)
// differs from the track it was last associated with.
IdSwitchReport id_switches(const TrackObservations& observations, std::span<const GroundTruthFrame> truth,
                           double min_iou = 0.3);

struct RunRecord {
  std::vector<FrameOutput> frames;
  std::vector<TrackEvent> events;
  RunSummary summary;
};

RunRecord run_and_record(FrameSource& source, DetectionProvider& provider, const PipelineConfig& cfg,
                         const TrackerConfig& tracker_cfg);

// Per-frame active track boxes as scored predictions.
DetectionTable track_table(std::span<const FrameOutput> frames, FrameIndex frame_count);

// Provider output recorded on the detection frames of a run, and the truth of
// those same frames.
struct DetectorEvalInput {
  DetectionTable predictions;
  DetectionTable truth;
};
DetectorEvalInput detector_eval_input(const SyntheticScene& scene, std::span<const FrameOutput> frames);

struct SweepRow {
  int miss_threshold = 0;
  double detector_ap = 0.0;
  double tracker_ap = 0.0;
  std::size_t id_switches = 0;
  std::size_t distinct_ids = 0;
};

// Runs one scene once per miss threshold with everything else fixed.
std::vector<SweepRow> miss_threshold_sweep(const SyntheticScene& scene, const DropPlan& plan,
                                           const PipelineConfig& cfg, TrackerConfig tracker_cfg,
                                           std::span<const int> thresholds, double iou_min = 0.5);
void write_sweep_table(std::ostream& out, std::span<const SweepRow> rows);

struct BenchCase {
  std::size_t buffer_size = 24;
  std::size_t detections_per_batch = 8;
  std::chrono::microseconds provider_latency{0};
  std::chrono::microseconds tracker_floor{0};
};

struct BenchRow {
  BenchCase config;
  std::size_t tracker_only_per_batch = 0;
  double sequential_fps = 0.0;  // median over repetitions
  double pipelined_fps = 0.0;
  double ratio = 0.0;  // pipelined / sequential
};

std::vector<BenchRow> throughput_bench(const SyntheticScene& scene, const DropPlan& plan, const PipelineConfig& base,
                                       const TrackerConfig& tracker_cfg, std::span<const BenchCase> cases,
                                       int repetitions = 3);
void write_bench_table(std::ostream& out, std::span<const BenchRow> rows);
void write_bench_kv(std::ostream& out, std::span<const BenchRow> rows);

}  // namespace pflow
