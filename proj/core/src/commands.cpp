#include "pflow/commands.hpp"

#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <variant>

#include "pflow/analytics.hpp"
#include "pflow/config.hpp"
#include "pflow/error.hpp"
#include "pflow/eval.hpp"
#include "pflow/netpbm.hpp"
#include "pflow/text.hpp"

namespace pflow {

namespace fs = std::filesystem;

std::optional<Command> command_from_string(std::string_view name) noexcept {
  if (name == "run") return Command::kRun;
  if (name == "heatmap") return Command::kHeatmap;
  if (name == "eval") return Command::kEval;
  if (name == "bench") return Command::kBench;
  return std::nullopt;
}

namespace artifacts {

std::string overlay_name(std::size_t slot) { return "overlay_slot" + std::to_string(slot) + ".ppm"; }
std::string heatmap_name(std::size_t slot) { return "heatmap_slot" + std::to_string(slot) + ".txt"; }

}  // namespace artifacts

namespace {

// Failures that happen while loading or checking the configuration.
struct ConfigFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig load(const CommandOptions& opts) {
  try {
    RunConfig cfg = load_config(opts.config);
    if (opts.seed) {
      cfg.seed = *opts.seed;
    }
    cfg.finalize();
    cfg.validate();
    return cfg;
  } catch (const ConfigError& e) {
    throw ConfigFailure(e.what());
  } catch (const ParseError& e) {
    throw ConfigFailure(e.what());
  }
}

std::ofstream open_out(const fs::path& dir, std::string_view name) {
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream f(p, std::ios::binary);
  if (!f) {
    throw std::runtime_error("cannot write " + p.string());
  }
  return f;
}

FrameIndex source_frame_count(const RunConfig& cfg) {
  if (cfg.source == SourceKind::kScene) {
    return cfg.scene_frames;
  }
  return static_cast<FrameIndex>(DirectoryFrameSource(cfg.frames_dir).frame_count());
}

std::unique_ptr<FrameSource> make_source(const RunConfig& cfg) {
  if (cfg.source == SourceKind::kScene) {
    return std::make_unique<SceneFrameSource>(cfg.scene());
  }
  return std::make_unique<DirectoryFrameSource>(cfg.frames_dir);
}

std::unique_ptr<DetectionProvider> make_provider(const RunConfig& cfg) {
  std::unique_ptr<DetectionProvider> p;
  if (cfg.provider == ProviderKind::kScripted) {
    p = std::make_unique<ScriptedProvider>(cfg.scene(), cfg.drop);
  } else {
    p = std::make_unique<FileProvider>(load_detection_file(cfg.detections_file, source_frame_count(cfg)));
  }
  if (cfg.provider_latency_ms > 0.0) {
    const auto us = std::chrono::microseconds(static_cast<long long>(cfg.provider_latency_ms * 1000.0));
    p = std::make_unique<LatencyShim>(std::move(p), us);
  }
  return p;
}

RunRecord live_run(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out) {
  auto source = make_source(cfg);
  auto provider = make_provider(cfg);
  RunRecord rec;
  auto on_batch = [&](const BatchTiming& t) {
    if (opts.verbose) {
      out << "batch " << t.sequence << " frames=" << t.frames << " detections=" << t.detection_frames
          << " detect_ms=" << text::format_fixed(t.detect_ms, 2) << " track_ms=" << text::format_fixed(t.track_ms, 2)
          << '\n';
    }
  };
  rec.summary = run_pipeline(
      *source, *provider, cfg.pipeline, cfg.tracker,
      [&](const FrameOutput& f) {
        rec.events.insert(rec.events.end(), f.events.begin(), f.events.end());
        rec.frames.push_back(f);
      },
      on_batch);
  return rec;
}

void write_tracks(std::ostream& out, std::span<const FrameOutput> frames) {
  out << "# frame id x y w h confidence\n";
  for (const FrameOutput& f : frames) {
    for (const TrackBox& t : f.tracks) {
      out << f.frame << ' ' << t.id << ' ' << text::format_fixed(t.box.x, 3) << ' ' << text::format_fixed(t.box.y, 3)
          << ' ' << text::format_fixed(t.box.w, 3) << ' ' << text::format_fixed(t.box.h, 3) << ' '
          << text::format_fixed(t.confidence, 3) << '\n';
    }
  }
}

std::size_t distinct_ids(std::span<const TrackEvent> events) {
  std::map<int, bool> ids;
  for (const TrackEvent& e : events) {
    ids[e.track_id] = true;
  }
  return ids.size();
}

int do_run(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out) {
  const RunRecord rec = live_run(cfg, opts, out);
  {
    auto f = open_out(opts.out_dir, artifacts::kEvents);
    write_event_log(f, rec.events);
  }
  {
    auto f = open_out(opts.out_dir, artifacts::kTracks);
    write_tracks(f, rec.frames);
  }
  {
    auto f = open_out(opts.out_dir, artifacts::kSummary);
    write_summary_report(f, rec.summary);
    f << '\n';
    write_summary_kv(f, rec.summary);
  }
  out << "run: " << rec.summary.frames << " frames, " << distinct_ids(rec.events) << " tracks, "
      << text::format_fixed(rec.summary.fps, 1) << " fps -> " << opts.out_dir.string() << '\n';
  return kExitOk;
}

// Frame `index` of the configured source at the processing raster, in colour.
RgbImage background_frame(const RunConfig& cfg, FrameIndex index) {
  const int w = cfg.pipeline.processing_width;
  const int h = cfg.pipeline.processing_height;
  if (cfg.source == SourceKind::kScene) {
    const SyntheticScene scene = cfg.scene();
    if (index >= scene.frame_count) {
      return RgbImage(w, h);
    }
    return to_rgb(render_frame(scene, index));
  }
  char name[32];
  std::snprintf(name, sizeof(name), "frame_%06d", index);
  for (const char* ext : {".ppm", ".pgm"}) {
    const fs::path p = cfg.frames_dir / (std::string(name) + ext);
    if (fs::exists(p)) {
      RgbImage img = std::visit(
          [](auto&& v) -> RgbImage {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, RgbImage>) {
              return v;
            } else {
              return to_rgb(v);
            }
          },
          netpbm::read_any(p));
      if (img.width() != w || img.height() != h) {
        img = downscale(img, w, h);
      }
      return img;
    }
  }
  return RgbImage(w, h);
}

int do_heatmap(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out) {
  TrackObservations observations;
  std::vector<TrackEvent> events;
  FrameIndex frame_count = 0;
  fs::create_directories(opts.out_dir);
  if (!opts.events.empty()) {
    std::ifstream in(opts.events);
    if (!in) {
      throw std::runtime_error("cannot open event log " + opts.events.string());
    }
    events = parse_event_log(in, opts.events.string());
    observations = observations_from_events(events);
    frame_count = source_frame_count(cfg);
  } else {
    const RunRecord rec = live_run(cfg, opts, out);
    events = rec.events;
    observations = observations_from_frames(rec.frames);
    frame_count = static_cast<FrameIndex>(rec.summary.frames);
    auto f = open_out(opts.out_dir, artifacts::kEvents);
    write_event_log(f, events);
  }

  std::vector<FrameSlot> slots = cfg.slots;
  if (slots.empty()) {
    slots.push_back({0, std::max<FrameIndex>(frame_count - 1, 0)});
  }
  const int w = cfg.pipeline.processing_width;
  const int h = cfg.pipeline.processing_height;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    HeatMap map(w, h);
    for (auto it = observations.lower_bound(slots[i].first); it != observations.end() && it->first <= slots[i].last;
         ++it) {
      for (const TrackBox& t : it->second) {
        map.accumulate(t.box, cfg.kernel);
      }
      map.record_frame(it->first);
    }
    const RgbImage overlay = render_overlay(normalize(map), w, h, background_frame(cfg, slots[i].first));
    netpbm::write(opts.out_dir / artifacts::overlay_name(i), overlay);
    auto f = open_out(opts.out_dir, artifacts::heatmap_name(i));
    write_heatmap_matrix(f, map);
    const auto [ax, ay] = map.argmax();
    out << "slot " << i << " [" << slots[i].first << ", " << slots[i].last << "]: max "
        << text::format_double(map.max_value()) << " at (" << ax << ", " << ay << ")\n";
  }

  const VisitStats stats = collect_stats(events, cfg.fps);
  auto f = open_out(opts.out_dir, artifacts::kStats);
  write_stats_table(f, stats);
  f << '\n';
  write_stats_kv(f, stats);
  out << "heatmap: " << slots.size() << " slot(s), " << stats.visitor_count << " visitors -> "
      << opts.out_dir.string() << '\n';
  return kExitOk;
}

DetectionTable truth_table_for(const RunConfig& cfg, FrameIndex frame_count) {
  if (!cfg.truth_file.empty()) {
    return load_detection_file(cfg.truth_file, frame_count);
  }
  return ground_truth_table(cfg.scene());
}

DetectionTable restrict_to_detection_frames(const DetectionTable& truth, std::span<const FrameOutput> frames) {
  DetectionTable out(static_cast<FrameIndex>(truth.frame_count()));
  for (const FrameOutput& f : frames) {
    if (f.detection_frame && f.frame < static_cast<FrameIndex>(truth.frame_count())) {
      out.at(f.frame) = truth.at(f.frame);
    }
  }
  return out;
}

DetectionTable detector_predictions(std::span<const FrameOutput> frames, FrameIndex frame_count) {
  DetectionTable out(frame_count);
  for (const FrameOutput& f : frames) {
    if (f.detection_frame && f.frame < frame_count) {
      out.at(f.frame) = f.detections;
    }
  }
  return out;
}

int do_eval(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out) {
  if (cfg.source != SourceKind::kScene && cfg.truth_file.empty()) {
    throw ConfigFailure("'eval.truth': required when input.source = directory");
  }
  const FrameIndex frame_count = source_frame_count(cfg);
  const DetectionTable truth = truth_table_for(cfg, frame_count);
  const bool have_identities = cfg.truth_file.empty();
  const auto truth_frames = have_identities ? ground_truth(cfg.scene()) : std::vector<GroundTruthFrame>{};

  std::vector<SweepRow> rows;
  PRCurve det_curve;
  PRCurve trk_curve;
  IdSwitchReport switches;
  bool first = true;
  for (int threshold : cfg.miss_thresholds) {
    TrackerConfig tracker = cfg.tracker;
    tracker.miss_threshold = threshold;
    RunConfig run_cfg = cfg;
    run_cfg.tracker = tracker;
    const RunRecord rec = live_run(run_cfg, opts, out);
    const PRCurve d = pr_curve(detector_predictions(rec.frames, frame_count), restrict_to_detection_frames(truth, rec.frames),
                               cfg.iou_min);
    const PRCurve t = pr_curve(track_table(rec.frames, frame_count), truth, cfg.iou_min);
    IdSwitchReport s;
    if (have_identities) {
      s = id_switches(observations_from_frames(rec.frames), truth_frames);
    } else {
      s.distinct_track_ids = distinct_ids(rec.events);
    }
    rows.push_back({threshold, d.ap, t.ap, s.switches, s.distinct_track_ids});
    if (first) {
      det_curve = d;
      trk_curve = t;
      switches = s;
      first = false;
    }
  }

  {
    auto f = open_out(opts.out_dir, artifacts::kPrDetector);
    write_pr_curve(f, det_curve);
  }
  {
    auto f = open_out(opts.out_dir, artifacts::kPrTracker);
    write_pr_curve(f, trk_curve);
  }
  {
    auto f = open_out(opts.out_dir, artifacts::kSweep);
    write_sweep_table(f, rows);
    if (!have_identities) {
      f << "# id switches need scene identities; reported as 0\n";
    }
  }
  std::ostringstream report;
  report << "iou_min " << text::format_double(cfg.iou_min) << '\n';
  report << "miss_threshold " << rows.front().miss_threshold << '\n';
  report << "detector_ap " << text::format_fixed(det_curve.ap, 6) << '\n';
  report << "detector_predictions " << det_curve.points.size() << '\n';
  report << "detector_truth " << det_curve.truth_count << '\n';
  report << "tracker_ap " << text::format_fixed(trk_curve.ap, 6) << '\n';
  report << "tracker_predictions " << trk_curve.points.size() << '\n';
  report << "tracker_truth " << trk_curve.truth_count << '\n';
  report << "id_switches " << (have_identities ? std::to_string(switches.switches) : std::string("n/a")) << '\n';
  report << "distinct_track_ids " << switches.distinct_track_ids << '\n';
  {
    auto f = open_out(opts.out_dir, artifacts::kEvalReport);
    f << report.str();
  }
  out << report.str();
  return kExitOk;
}

int do_bench(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out) {
  if (cfg.source != SourceKind::kScene || cfg.provider != ProviderKind::kScripted) {
    throw ConfigFailure("'input.source': bench needs a scene source and the scripted provider");
  }
  RunConfig bench_cfg = cfg;
  bench_cfg.scene_frames = cfg.bench_frames;
  const SyntheticScene scene = bench_cfg.scene();
  std::vector<BenchCase> cases;
  const auto floor = std::chrono::microseconds(static_cast<long long>(cfg.bench_tracker_floor_ms * 1000.0));
  for (const auto& [buffer, dets] : cfg.bench_batches) {
    for (double latency : cfg.bench_provider_latency_ms) {
      cases.push_back({buffer, dets, std::chrono::microseconds(static_cast<long long>(latency * 1000.0)), floor});
    }
  }
  const auto rows = throughput_bench(scene, cfg.drop, cfg.pipeline, cfg.tracker, cases, cfg.bench_repetitions);
  auto f = open_out(opts.out_dir, artifacts::kBench);
  write_bench_table(f, rows);
  f << '\n';
  write_bench_kv(f, rows);
  write_bench_table(out, rows);
  return kExitOk;
}

}  // namespace

int run_command(Command cmd, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  auto one_line = [](std::string s) {
    for (char& c : s) {
      if (c == '\n' || c == '\r') {
        c = ' ';
      }
    }
    return s;
  };
  try {
    const RunConfig cfg = load(opts);
    switch (cmd) {
      case Command::kRun:
        return do_run(cfg, opts, out);
      case Command::kHeatmap:
        return do_heatmap(cfg, opts, out);
      case Command::kEval:
        return do_eval(cfg, opts, out);
      case Command::kBench:
        return do_bench(cfg, opts, out);
    }
    return kExitRuntime;
  } catch (const ConfigFailure& e) {
    err << "pflow: error[config]: " << one_line(e.what()) << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "pflow: error[runtime]: " << one_line(e.what()) << '\n';
    return kExitRuntime;
  }
}

}  // namespace pflow
