#include "pflow/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <regex>
#include <stdexcept>
#include <thread>

#include "pflow/bounded_queue.hpp"
#include "pflow/error.hpp"
#include "pflow/netpbm.hpp"
#include "pflow/text.hpp"

namespace pflow {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

DirectoryFrameSource::DirectoryFrameSource(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("frame directory not found: " + dir.string());
  }
  static const std::regex pattern(R"(frame_(\d{6})\.(pgm|ppm))");
  std::map<long, fs::path> by_index;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, m, pattern)) {
      const long idx = std::stol(m[1].str());
      if (!by_index.emplace(idx, entry.path()).second) {
        throw std::runtime_error("frame " + std::to_string(idx) + " present as both .pgm and .ppm in " + dir.string());
      }
    }
  }
  long expected = 0;
  for (auto& [idx, path] : by_index) {
    if (idx != expected) {
      throw std::runtime_error("frame numbering in " + dir.string() + " has a gap at index " + std::to_string(expected));
    }
    files_.push_back(std::move(path));
    ++expected;
  }
}

std::optional<SourceFrame> DirectoryFrameSource::next() {
  if (pos_ >= files_.size()) {
    return std::nullopt;
  }
  const fs::path& path = files_[pos_];
  SourceFrame f;
  f.index = static_cast<FrameIndex>(pos_++);
  auto img = netpbm::read_any(path);
  if (auto* rgb = std::get_if<RgbImage>(&img)) {
    f.gray = to_gray(*rgb);
    f.color = std::make_shared<const RgbImage>(std::move(*rgb));
  } else {
    f.gray = std::get<GrayImage>(std::move(img));
  }
  return f;
}

SceneFrameSource::SceneFrameSource(SyntheticScene scene) : scene_(std::move(scene)) { validate_scene(scene_); }

std::optional<SourceFrame> SceneFrameSource::next() {
  if (pos_ >= scene_.frame_count) {
    return std::nullopt;
  }
  SourceFrame f;
  f.index = pos_;
  f.gray = render_frame(scene_, pos_);
  ++pos_;
  return f;
}

std::optional<SourceFrame> VectorFrameSource::next() {
  if (pos_ >= frames_.size()) {
    return std::nullopt;
  }
  SourceFrame f;
  f.index = static_cast<FrameIndex>(pos_);
  f.gray = frames_[pos_++];
  return f;
}

void write_frame_directory(const fs::path& dir, const SyntheticScene& scene) {
  fs::create_directories(dir);
  char name[32];
  for (FrameIndex f = 0; f < scene.frame_count; ++f) {
    std::snprintf(name, sizeof(name), "frame_%06d.pgm", f);
    netpbm::write(dir / name, render_frame(scene, f));
  }
}

BatchPartition partition_batch(std::size_t frame_count, std::size_t detections_per_batch) {
  if (detections_per_batch == 0 || frame_count == 0) {
    throw std::invalid_argument("partition_batch: frame count and detections per batch must be >= 1");
  }
  if (frame_count % detections_per_batch != 0) {
    throw std::invalid_argument("partition_batch: " + std::to_string(frame_count) + " frames not divisible by " +
                                std::to_string(detections_per_batch) + " detections per batch");
  }
  const std::size_t stride = frame_count / detections_per_batch;
  BatchPartition p;
  for (std::size_t i = 0; i < frame_count; ++i) {
    (i % stride == 0 ? p.detection_positions : p.tracker_positions).push_back(i);
  }
  return p;
}

std::vector<std::pair<std::size_t, std::vector<std::size_t>>> plan_batches(std::size_t n, std::size_t buffer_size,
                                                                         std::size_t detections_per_batch) {
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> out;
  if (n == 0) {
    return out;
  }
  if (n == buffer_size) {
    out.emplace_back(n, partition_batch(n, detections_per_batch).detection_positions);
    return out;
  }
  const std::size_t stride = buffer_size / detections_per_batch;
  const std::size_t prefix = n / stride * stride;
  if (prefix > 0) {
    out.emplace_back(prefix, partition_batch(prefix, prefix / stride).detection_positions);
  }
  if (n > prefix) {
    std::vector<std::size_t> all(n - prefix);
    for (std::size_t i = 0; i < all.size(); ++i) {
      all[i] = i;
    }
    out.emplace_back(n - prefix, std::move(all));
  }
  return out;
}

void PipelineConfig::validate() const {
  if (buffer_size < 1) {
    throw ConfigError("pipeline.buffer_size", "must be >= 1");
  }
  if (detections_per_batch < 1) {
    throw ConfigError("pipeline.detections_per_batch", "must be >= 1");
  }
  if (buffer_size % detections_per_batch != 0) {
    throw ConfigError("pipeline.buffer_size", "buffer_size (" + std::to_string(buffer_size) +
                                                  ") must be divisible by detections_per_batch (" +
                                                  std::to_string(detections_per_batch) + ")");
  }
  if (processing_width < 8 || processing_height < 8) {
    throw ConfigError("pipeline.processing_width", "processing raster must be at least 8x8");
  }
  if (detection_width < 0 || detection_height < 0 || (detection_width == 0) != (detection_height == 0)) {
    throw ConfigError("pipeline.detection_width", "detection raster must be both zero or both positive");
  }
  if (queue_capacity < 1) {
    throw ConfigError("pipeline.queue_capacity", "must be >= 1");
  }
}

namespace {

struct DetectedBatch {
  FrameBatch batch;
  std::vector<std::optional<std::vector<Detection>>> detections;  // per position
  double detect_ms = 0.0;
};

PreparedFrame prepare(SourceFrame&& f, const PipelineConfig& cfg, int levels) {
  GrayImage img = (f.gray.width() == cfg.processing_width && f.gray.height() == cfg.processing_height)
                      ? std::move(f.gray)
                      : downscale(f.gray, cfg.processing_width, cfg.processing_height);
  int usable = 1;
  while (usable < levels && (1 << usable) <= std::min(img.width(), img.height())) {
    ++usable;
  }
  return {f.index, std::make_shared<const Pyramid>(build_pyramid(img, usable)), Clock::now()};
}

// Pulls frames into the image buffer and hands out finished batches.
class Ingest {
 public:
  Ingest(FrameSource& source, const PipelineConfig& cfg, int levels) : source_(source), cfg_(cfg), levels_(levels) {}

  // Returns the next batches (possibly several for the final partial buffer);
  // empty when the source is exhausted. on_frame is called per buffered frame.
  template <typename OnFrame>
  std::vector<FrameBatch> next(OnFrame&& on_frame) {
    std::vector<PreparedFrame> buffer;
    buffer.reserve(cfg_.buffer_size);
    const auto t0 = Clock::now();
    while (buffer.size() < cfg_.buffer_size) {
      auto f = source_.next();
      if (!f) {
        break;
      }
      if (f->index != expected_) {
        throw std::runtime_error("frame source yielded index " + std::to_string(f->index) + ", expected " +
                                 std::to_string(expected_));
      }
      ++expected_;
      buffer.push_back(prepare(std::move(*f), cfg_, levels_));
      on_frame(buffer.size());
    }
    busy_s += seconds_since(t0);
    std::vector<FrameBatch> out;
    std::size_t offset = 0;
    for (auto& [count, positions] : plan_batches(buffer.size(), cfg_.buffer_size, cfg_.detections_per_batch)) {
      FrameBatch b;
      b.sequence = sequence_++;
      b.frames.assign(std::make_move_iterator(buffer.begin() + static_cast<std::ptrdiff_t>(offset)),
                      std::make_move_iterator(buffer.begin() + static_cast<std::ptrdiff_t>(offset + count)));
      b.detection_positions = std::move(positions);
      offset += count;
      out.push_back(std::move(b));
    }
    return out;
  }

  double busy_s = 0.0;

 private:
  FrameSource& source_;
  const PipelineConfig& cfg_;
  int levels_;
  FrameIndex expected_ = 0;
  std::size_t sequence_ = 0;
};

DetectedBatch detect_batch(FrameBatch batch, DetectionProvider& provider, const PipelineConfig& cfg) {
  const auto t0 = Clock::now();
  std::vector<FrameView> views;
  for (std::size_t pos : batch.detection_positions) {
    const PreparedFrame& f = batch.frames[pos];
    views.push_back({f.index, &f.pyramid->base()});
  }
  DetectionBatchResult result = provider.detect(views);
  DetectedBatch out;
  out.detections.resize(batch.frames.size());
  for (std::size_t pos : batch.detection_positions) {
    const FrameIndex idx = batch.frames[pos].index;
    auto it = result.find(idx);
    if (it == result.end()) {
      throw std::runtime_error("detection provider returned no entry for frame " + std::to_string(idx));
    }
    if (cfg.detection_width > 0 &&
        (cfg.detection_width != cfg.processing_width || cfg.detection_height != cfg.processing_height)) {
      out.detections[pos] = scale_detections(it->second, cfg.detection_width, cfg.detection_height,
                                             cfg.processing_width, cfg.processing_height);
    } else {
      out.detections[pos] = std::move(it->second);
    }
  }
  out.batch = std::move(batch);
  out.detect_ms = seconds_since(t0) * 1e3;
  return out;
}

std::vector<FrameOutput> track_batch(const DetectedBatch& db, Tracker& tracker, const PipelineConfig& cfg) {
  const auto t0 = Clock::now();
  std::vector<FrameOutput> out;
  out.reserve(db.batch.frames.size());
  for (std::size_t pos = 0; pos < db.batch.frames.size(); ++pos) {
    const PreparedFrame& f = db.batch.frames[pos];
    const auto& dets = db.detections[pos];
    tracker.step(f.index, *f.pyramid, dets ? &*dets : nullptr);
    out.push_back({f.index, dets.has_value(), dets.value_or(std::vector<Detection>{}), tracker.active_boxes(),
                   tracker.take_events()});
  }
  if (cfg.tracker_floor_per_batch.count() > 0) {
    std::this_thread::sleep_until(t0 + cfg.tracker_floor_per_batch);
  }
  return out;
}

struct TrackedBatch {
  std::vector<FrameOutput> outputs;
  std::vector<Clock::time_point> ingested;
  BatchTiming timing;
};

// Sink-side bookkeeping shared by both modes.
class Emitter {
 public:
  Emitter(const FrameSink& sink, RunSummary& summary) : sink_(sink), summary_(summary) {}

  void emit(const TrackedBatch& tb) {
    for (std::size_t i = 0; i < tb.outputs.size(); ++i) {
      const FrameOutput& o = tb.outputs[i];
      if (last_ && o.frame <= *last_) {
        throw std::logic_error("pipeline emitted frame " + std::to_string(o.frame) + " out of order");
      }
      last_ = o.frame;
      const double latency = std::chrono::duration<double, std::milli>(Clock::now() - tb.ingested[i]).count();
      latency_sum_ += latency;
      summary_.max_latency_ms = std::max(summary_.max_latency_ms, latency);
      if (sink_) {
        sink_(o);
      }
      ++summary_.frames;
      emitted.fetch_add(1, std::memory_order_relaxed);
    }
    ++summary_.batches;
    summary_.detection_frames += tb.timing.detection_frames;
    summary_.batch_timings.push_back(tb.timing);
  }

  void finish() { summary_.mean_latency_ms = summary_.frames > 0 ? latency_sum_ / summary_.frames : 0.0; }

  std::atomic<std::size_t> emitted{0};

 private:
  const FrameSink& sink_;
  RunSummary& summary_;
  std::optional<FrameIndex> last_;
  double latency_sum_ = 0.0;
};

TrackedBatch run_tracker_stage(const DetectedBatch& db, Tracker& tracker, const PipelineConfig& cfg, double& busy_s) {
  const auto t0 = Clock::now();
  TrackedBatch tb;
  tb.outputs = track_batch(db, tracker, cfg);
  for (const PreparedFrame& f : db.batch.frames) {
    tb.ingested.push_back(f.ingested);
  }
  const double elapsed = seconds_since(t0);
  busy_s += elapsed;
  tb.timing = {db.batch.sequence, db.batch.frames.size(), db.batch.detection_positions.size(), db.detect_ms,
               elapsed * 1e3};
  return tb;
}

}  // namespace

RunSummary run_pipeline(FrameSource& source, DetectionProvider& provider, const PipelineConfig& cfg,
                        const TrackerConfig& tracker_cfg, const FrameSink& sink,
                        const std::function<void(const BatchTiming&)>& on_batch) {
  cfg.validate();
  Tracker tracker(tracker_cfg);
  RunSummary summary;
  summary.mode = cfg.mode;
  Emitter emitter(sink, summary);
  Ingest ingest(source, cfg, tracker_cfg.flow.levels);
  std::atomic<std::size_t> ingested{0};
  std::atomic<std::size_t> queued_frames{0};
  std::atomic<std::size_t> max_buffered{0};
  std::atomic<std::size_t> max_in_flight{0};
  auto note = [](std::atomic<std::size_t>& max, std::size_t v) {
    std::size_t cur = max.load();
    while (v > cur && !max.compare_exchange_weak(cur, v)) {
    }
  };
  auto on_frame = [&](std::size_t building) {
    const std::size_t in = ingested.fetch_add(1) + 1;
    note(max_buffered, building + queued_frames.load());
    note(max_in_flight, in - emitter.emitted.load());
  };

  const auto t0 = Clock::now();
  double detector_busy = 0.0;
  double tracker_busy = 0.0;

  if (cfg.mode == PipelineMode::kSequential) {
    for (;;) {
      auto batches = ingest.next(on_frame);
      if (batches.empty()) {
        break;
      }
      for (FrameBatch& b : batches) {
        DetectedBatch db = detect_batch(std::move(b), provider, cfg);
        detector_busy += db.detect_ms / 1e3;
        TrackedBatch tb = run_tracker_stage(db, tracker, cfg, tracker_busy);
        if (on_batch) {
          on_batch(tb.timing);
        }
        emitter.emit(tb);
      }
    }
  } else {
    BoundedQueue<FrameBatch> to_detector(cfg.queue_capacity);
    BoundedQueue<DetectedBatch> to_tracker(cfg.queue_capacity);
    BoundedQueue<TrackedBatch> to_sink(cfg.queue_capacity);
    std::mutex err_mu;
    std::exception_ptr error;
    auto fail = [&](std::exception_ptr e) {
      {
        std::lock_guard lock(err_mu);
        if (!error) {
          error = e;
        }
      }
      to_detector.abort();
      to_tracker.abort();
      to_sink.abort();
    };

    std::thread ingest_thread([&] {
      try {
        for (;;) {
          auto batches = ingest.next(on_frame);
          if (batches.empty()) {
            break;
          }
          for (FrameBatch& b : batches) {
            const std::size_t n = b.frames.size();
            queued_frames.fetch_add(n);
            if (!to_detector.push(std::move(b))) {
              return;
            }
          }
        }
        to_detector.close();
      } catch (...) {
        fail(std::current_exception());
      }
    });
    std::thread detector_thread([&] {
      try {
        while (auto b = to_detector.pop()) {
          queued_frames.fetch_sub(b->frames.size());
          DetectedBatch db = detect_batch(std::move(*b), provider, cfg);
          detector_busy += db.detect_ms / 1e3;
          if (!to_tracker.push(std::move(db))) {
            return;
          }
        }
        to_tracker.close();
      } catch (...) {
        fail(std::current_exception());
      }
    });
    std::thread tracker_thread([&] {
      try {
        while (auto db = to_tracker.pop()) {
          if (!to_sink.push(run_tracker_stage(*db, tracker, cfg, tracker_busy))) {
            return;
          }
        }
        to_sink.close();
      } catch (...) {
        fail(std::current_exception());
      }
    });

    try {
      while (auto tb = to_sink.pop()) {
        if (on_batch) {
          on_batch(tb->timing);
        }
        emitter.emit(*tb);
      }
    } catch (...) {
      fail(std::current_exception());
    }
    ingest_thread.join();
    detector_thread.join();
    tracker_thread.join();
    if (error) {
      try {
        std::rethrow_exception(error);
      } catch (const std::runtime_error&) {
        throw;
      } catch (const std::exception& e) {
        throw std::runtime_error(std::string("pipeline aborted: ") + e.what());
      }
    }
  }

  emitter.finish();
  summary.wall_s = seconds_since(t0);
  summary.fps = summary.wall_s > 0.0 ? static_cast<double>(summary.frames) / summary.wall_s : 0.0;
  summary.ingest_busy_s = ingest.busy_s;
  summary.detector_busy_s = detector_busy;
  summary.tracker_busy_s = tracker_busy;
  summary.max_buffered_frames = max_buffered.load();
  summary.max_in_flight_frames = max_in_flight.load();
  return summary;
}

namespace {

const char* mode_name(PipelineMode m) { return m == PipelineMode::kPipelined ? "pipelined" : "sequential"; }

}  // namespace

void write_summary_report(std::ostream& out, const RunSummary& s) {
  out << "run summary (" << mode_name(s.mode) << ")\n"
      << "  frames            " << s.frames << " in " << s.batches << " batches (" << s.detection_frames
      << " detection frames)\n"
      << "  wall time         " << text::format_fixed(s.wall_s, 3) << " s\n"
      << "  throughput        " << text::format_fixed(s.fps, 2) << " fps\n"
      << "  latency           mean " << text::format_fixed(s.mean_latency_ms, 1) << " ms, max "
      << text::format_fixed(s.max_latency_ms, 1) << " ms\n"
      << "  busy ingest       " << text::format_fixed(s.ingest_busy_s, 3) << " s\n"
      << "  busy detector     " << text::format_fixed(s.detector_busy_s, 3) << " s\n"
      << "  busy tracker      " << text::format_fixed(s.tracker_busy_s, 3) << " s\n"
      << "  buffered (max)    " << s.max_buffered_frames << " frames\n";
}

void write_summary_kv(std::ostream& out, const RunSummary& s) {
  out << "mode=" << mode_name(s.mode) << '\n'
      << "frames=" << s.frames << '\n'
      << "batches=" << s.batches << '\n'
      << "detection_frames=" << s.detection_frames << '\n'
      << "wall_s=" << text::format_fixed(s.wall_s, 6) << '\n'
      << "fps=" << text::format_fixed(s.fps, 3) << '\n'
      << "mean_latency_ms=" << text::format_fixed(s.mean_latency_ms, 3) << '\n'
      << "max_latency_ms=" << text::format_fixed(s.max_latency_ms, 3) << '\n'
      << "ingest_busy_s=" << text::format_fixed(s.ingest_busy_s, 6) << '\n'
      << "detector_busy_s=" << text::format_fixed(s.detector_busy_s, 6) << '\n'
      << "tracker_busy_s=" << text::format_fixed(s.tracker_busy_s, 6) << '\n'
      << "max_buffered_frames=" << s.max_buffered_frames << '\n'
      << "max_in_flight_frames=" << s.max_in_flight_frames << '\n';
}

}  // namespace pflow
