#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pflow/detect.hpp"
#include "pflow/image.hpp"
#include "pflow/imgproc.hpp"
#include "pflow/scene.hpp"
#include "pflow/track.hpp"

namespace pflow {

struct SourceFrame {
  FrameIndex index = 0;
  GrayImage gray;
  std::shared_ptr<const RgbImage> color;  // optional
};

// Yields frames in increasing, consecutive index order.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::optional<SourceFrame> next() = 0;
};

// Reads frame_%06d.pgm / frame_%06d.ppm from a directory, starting at 0.
class DirectoryFrameSource final : public FrameSource {
 public:
  // Throws std::runtime_error when the directory is missing or the numbering
  // has gaps.
  explicit DirectoryFrameSource(const std::filesystem::path& dir);
  std::optional<SourceFrame> next() override;
  std::size_t frame_count() const noexcept { return files_.size(); }

 private:
  std::vector<std::filesystem::path> files_;
  std::size_t pos_ = 0;
};

// Renders a synthetic scene lazily.
class SceneFrameSource final : public FrameSource {
 public:
  explicit SceneFrameSource(SyntheticScene scene);
  std::optional<SourceFrame> next() override;

 private:
  SyntheticScene scene_;
  FrameIndex pos_ = 0;
};

class VectorFrameSource final : public FrameSource {
 public:
  explicit VectorFrameSource(std::vector<GrayImage> frames) : frames_(std::move(frames)) {}
  std::optional<SourceFrame> next() override;

 private:
  std::vector<GrayImage> frames_;
  std::size_t pos_ = 0;
};

void write_frame_directory(const std::filesystem::path& dir, const SyntheticScene& scene);

struct BatchPartition {
  std::vector<std::size_t> detection_positions;
  std::vector<std::size_t> tracker_positions;
};

// Detection frames are positions {0, s, 2s, ...} with s = frame_count /
// detections_per_batch. Throws std::invalid_argument unless divisible.
BatchPartition partition_batch(std::size_t frame_count, std::size_t detections_per_batch);

struct PreparedFrame {
  FrameIndex index = 0;
  std::shared_ptr<const Pyramid> pyramid;  // processing raster, immutable
  std::chrono::steady_clock::time_point ingested;
};

struct FrameBatch {
  std::size_t sequence = 0;
  std::vector<PreparedFrame> frames;
  std::vector<std::size_t> detection_positions;  // sorted positions into frames
};

// Splits a buffer of n frames into batches: the full buffer when n equals
// buffer_size, otherwise the largest stride-aligned prefix followed by a
// batch whose frames are all detection frames.
std::vector<std::pair<std::size_t, std::vector<std::size_t>>> plan_batches(std::size_t n, std::size_t buffer_size,
                                                                         std::size_t detections_per_batch);

enum class PipelineMode : std::uint8_t { kPipelined, kSequential };

struct PipelineConfig {
  std::size_t buffer_size = 24;
  std::size_t detections_per_batch = 8;
  int processing_width = 512;
  int processing_height = 288;
  int detection_width = 0;  // raster of provider coordinates; 0 = processing raster
  int detection_height = 0;
  std::size_t queue_capacity = 1;  // batches per handoff queue
  PipelineMode mode = PipelineMode::kPipelined;
  std::chrono::microseconds tracker_floor_per_batch{0};  // benchmark load shim: minimum tracker time per batch

  // Throws ConfigError naming the offending key.
  void validate() const;
};

struct FrameOutput {
  FrameIndex frame = 0;
  bool detection_frame = false;
  std::vector<Detection> detections;  // provider output before gating, detection frames only
  std::vector<TrackBox> tracks;
  std::vector<TrackEvent> events;
};

struct BatchTiming {
  std::size_t sequence = 0;
  std::size_t frames = 0;
  std::size_t detection_frames = 0;
  double detect_ms = 0.0;
  double track_ms = 0.0;
};

struct RunSummary {
  PipelineMode mode = PipelineMode::kPipelined;
  std::size_t frames = 0;
  std::size_t batches = 0;
  std::size_t detection_frames = 0;
  double wall_s = 0.0;
  double fps = 0.0;
  double ingest_busy_s = 0.0;
  double detector_busy_s = 0.0;
  double tracker_busy_s = 0.0;
  double mean_latency_ms = 0.0;
  double max_latency_ms = 0.0;
  std::size_t max_buffered_frames = 0;   // ingest buffer plus detector queue
  std::size_t max_in_flight_frames = 0;  // ingested but not yet handed to the sink
  std::vector<BatchTiming> batch_timings;
};

void write_summary_report(std::ostream& out, const RunSummary& s);
void write_summary_kv(std::ostream& out, const RunSummary& s);

using FrameSink = std::function<void(const FrameOutput&)>;

// Runs source -> buffer -> detector -> tracker -> sink. In pipelined mode the
// ingest, detector and tracker roles run on their own threads joined by
// bounded queues and the sink is called on the calling thread; sequential
// mode runs the same stages inline. Outputs arrive in frame order. Provider or
// source failures abort the run and are rethrown as std::runtime_error.
RunSummary run_pipeline(FrameSource& source, DetectionProvider& provider, const PipelineConfig& cfg,
                        const TrackerConfig& tracker_cfg, const FrameSink& sink,
                        const std::function<void(const BatchTiming&)>& on_batch = {});

}  // namespace pflow
