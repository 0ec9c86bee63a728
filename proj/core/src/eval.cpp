#include "pflow/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <set>
#include <stdexcept>

#include "pflow/text.hpp"

namespace pflow {

PRCurve pr_curve(const DetectionTable& predictions, const DetectionTable& truth, double iou_min) {
  if (!(iou_min > 0.0 && iou_min < 1.0)) {
    throw std::invalid_argument("pr_curve: iou_min must lie in (0, 1)");
  }
  struct Ranked {
    double confidence;
    FrameIndex frame;
    std::size_t index;
  };
  std::vector<Ranked> ranked;
  for (FrameIndex f = 0; f < predictions.frame_count(); ++f) {
    const auto& dets = predictions.at(f);
    for (std::size_t i = 0; i < dets.size(); ++i) {
      ranked.push_back({dets[i].confidence, f, i});
    }
  }
  // Already in (frame, index) order, so a stable sort keeps the tie rule.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) { return a.confidence > b.confidence; });

  PRCurve curve;
  curve.truth_count = truth.total();
  std::vector<std::vector<bool>> claimed(static_cast<std::size_t>(truth.frame_count()));
  for (FrameIndex f = 0; f < truth.frame_count(); ++f) {
    claimed[static_cast<std::size_t>(f)].assign(truth.at(f).size(), false);
  }
  std::size_t tp = 0;
  double precision_sum = 0.0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    const Ranked& r = ranked[k];
    const BBox& box = predictions.at(r.frame).at(r.index).box;
    bool hit = false;
    if (r.frame < truth.frame_count()) {
      const auto& gts = truth.at(r.frame);
      auto& used = claimed[static_cast<std::size_t>(r.frame)];
      double best = -1.0;
      std::size_t best_g = 0;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (used[g]) {
          continue;
        }
        const double v = iou(box, gts[g].box);
        if (v >= iou_min && v > best) {
          best = v;
          best_g = g;
        }
      }
      if (best >= 0.0) {
        used[best_g] = true;
        hit = true;
      }
    }
    curve.true_positive.push_back(hit);
    if (hit) {
      ++tp;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(k + 1);
    const double recall =
        curve.truth_count > 0 ? static_cast<double>(tp) / static_cast<double>(curve.truth_count) : 0.0;
    curve.points.push_back({recall, precision});
    if (hit) {
      precision_sum += precision;
    }
  }
  curve.ap = curve.truth_count > 0 ? std::min(1.0, precision_sum / static_cast<double>(curve.truth_count)) : 0.0;
  return curve;
}

void write_pr_curve(std::ostream& out, const PRCurve& curve) {
  out << "# recall precision\n";
  for (const PRPoint& p : curve.points) {
    out << text::format_fixed(p.recall, 6) << ' ' << text::format_fixed(p.precision, 6) << '\n';
  }
  out << "AP " << text::format_fixed(curve.ap, 6) << '\n';
}

TrackObservations observations_from_events(std::span<const TrackEvent> events) {
  TrackObservations out;
  for (const TrackEvent& e : events) {
    if (e.kind == EventKind::kSpawn || e.kind == EventKind::kMatch || e.kind == EventKind::kMiss ||
        e.kind == EventKind::kRecover) {
      out[e.frame].push_back({e.track_id, e.box, 0.0});
    }
  }
  return out;
}

TrackObservations observations_from_frames(std::span<const FrameOutput> frames) {
  TrackObservations out;
  for (const FrameOutput& f : frames) {
    out[f.frame] = f.tracks;
  }
  return out;
}

IdSwitchReport id_switches(const TrackObservations& observations, std::span<const GroundTruthFrame> truth,
                           double min_iou) {
  IdSwitchReport report;
  std::map<int, int> associated;
  std::set<int> ids;
  for (const auto& [frame, tracks] : observations) {
    for (const TrackBox& t : tracks) {
      ids.insert(t.id);
    }
    if (frame < 0 || static_cast<std::size_t>(frame) >= truth.size()) {
      continue;
    }
    for (const GroundTruthBox& g : truth[static_cast<std::size_t>(frame)]) {
      int best_id = 0;
      double best = 0.0;
      for (const TrackBox& t : tracks) {
        const double v = iou(g.box, t.box);
        if (v >= min_iou && (v > best || (v == best && t.id < best_id))) {
          best = v;
          best_id = t.id;
        }
      }
      if (best_id == 0) {
        continue;
      }
      auto it = associated.find(g.agent_id);
      if (it != associated.end() && it->second != best_id) {
        ++report.switches;
        ++report.per_agent[g.agent_id];
      }
      associated[g.agent_id] = best_id;
    }
  }
  report.distinct_track_ids = ids.size();
  return report;
}

RunRecord run_and_record(FrameSource& source, DetectionProvider& provider, const PipelineConfig& cfg,
                         const TrackerConfig& tracker_cfg) {
  RunRecord rec;
  rec.summary = run_pipeline(source, provider, cfg, tracker_cfg, [&](const FrameOutput& out) {
    rec.events.insert(rec.events.end(), out.events.begin(), out.events.end());
    rec.frames.push_back(out);
  });
  return rec;
}

DetectionTable track_table(std::span<const FrameOutput> frames, FrameIndex frame_count) {
  DetectionTable table(frame_count);
  for (const FrameOutput& f : frames) {
    if (f.frame < 0 || f.frame >= frame_count) {
      continue;
    }
    for (const TrackBox& t : f.tracks) {
      table.at(f.frame).push_back({t.box, t.confidence});
    }
  }
  return table;
}

DetectorEvalInput detector_eval_input(const SyntheticScene& scene, std::span<const FrameOutput> frames) {
  DetectorEvalInput in{DetectionTable(scene.frame_count), DetectionTable(scene.frame_count)};
  for (const FrameOutput& f : frames) {
    if (!f.detection_frame || f.frame < 0 || f.frame >= scene.frame_count) {
      continue;
    }
    in.predictions.at(f.frame) = f.detections;
    for (const GroundTruthBox& g : ground_truth_frame(scene, f.frame)) {
      in.truth.at(f.frame).push_back({g.box, 1.0});
    }
  }
  return in;
}

std::vector<SweepRow> miss_threshold_sweep(const SyntheticScene& scene, const DropPlan& plan,
                                           const PipelineConfig& cfg, TrackerConfig tracker_cfg,
                                           std::span<const int> thresholds, double iou_min) {
  const auto truth = ground_truth(scene);
  const DetectionTable truth_table = ground_truth_table(scene);
  std::vector<SweepRow> rows;
  for (int threshold : thresholds) {
    tracker_cfg.miss_threshold = threshold;
    SceneFrameSource source(scene);
    ScriptedProvider provider(scene, plan);
    const RunRecord rec = run_and_record(source, provider, cfg, tracker_cfg);
    const auto det = detector_eval_input(scene, rec.frames);
    const auto switches = id_switches(observations_from_frames(rec.frames), truth);
    rows.push_back({threshold, pr_curve(det.predictions, det.truth, iou_min).ap,
                    pr_curve(track_table(rec.frames, scene.frame_count), truth_table, iou_min).ap,
                    switches.switches, switches.distinct_track_ids});
  }
  return rows;
}

void write_sweep_table(std::ostream& out, std::span<const SweepRow> rows) {
  out << "miss_threshold  detector_ap  tracker_ap  id_switches  distinct_ids\n";
  for (const SweepRow& r : rows) {
    char line[160];
    std::snprintf(line, sizeof(line), "%14d  %11s  %10s  %11zu  %12zu\n", r.miss_threshold,
                  text::format_fixed(r.detector_ap, 4).c_str(), text::format_fixed(r.tracker_ap, 4).c_str(),
                  r.id_switches, r.distinct_ids);
    out << line;
  }
  if (rows.size() >= 2) {
    const SweepRow& a = rows.front();
    const SweepRow& b = rows.back();
    out << "delta (" << b.miss_threshold << " vs " << a.miss_threshold
        << "): tracker_ap " << text::format_fixed(b.tracker_ap - a.tracker_ap, 4) << ", id_switches "
        << static_cast<long long>(b.id_switches) - static_cast<long long>(a.id_switches) << '\n';
  }
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<BenchRow> throughput_bench(const SyntheticScene& scene, const DropPlan& plan, const PipelineConfig& base,
                                       const TrackerConfig& tracker_cfg, std::span<const BenchCase> cases,
                                       int repetitions) {
  if (repetitions < 1) {
    throw std::invalid_argument("throughput_bench: repetitions must be >= 1");
  }
  // Frames are rendered up front and replayed from memory.
  std::vector<GrayImage> frames;
  for (FrameIndex f = 0; f < scene.frame_count; ++f) {
    frames.push_back(render_frame(scene, f));
  }
  std::vector<BenchRow> rows;
  for (const BenchCase& c : cases) {
    BenchRow row;
    row.config = c;
    row.tracker_only_per_batch = c.buffer_size - c.detections_per_batch;
    std::vector<double> fps[2];
    for (int rep = 0; rep < repetitions; ++rep) {
      for (PipelineMode mode : {PipelineMode::kSequential, PipelineMode::kPipelined}) {
        PipelineConfig cfg = base;
        cfg.buffer_size = c.buffer_size;
        cfg.detections_per_batch = c.detections_per_batch;
        cfg.tracker_floor_per_batch = c.tracker_floor;
        cfg.mode = mode;
        VectorFrameSource source(frames);
        LatencyShim provider(std::make_unique<ScriptedProvider>(scene, plan), c.provider_latency);
        const RunSummary s = run_pipeline(source, provider, cfg, tracker_cfg, {});
        fps[mode == PipelineMode::kPipelined ? 1 : 0].push_back(s.fps);
      }
    }
    row.sequential_fps = median(fps[0]);
    row.pipelined_fps = median(fps[1]);
    row.ratio = row.sequential_fps > 0.0 ? row.pipelined_fps / row.sequential_fps : 0.0;
    rows.push_back(row);
  }
  return rows;
}

void write_bench_table(std::ostream& out, std::span<const BenchRow> rows) {
  out << "buffer  dets  tracker_only  provider_ms  tracker_floor_ms  mode         fps\n";
  for (const BenchRow& r : rows) {
    const double provider_ms = static_cast<double>(r.config.provider_latency.count()) / 1e3;
    const double floor_ms = static_cast<double>(r.config.tracker_floor.count()) / 1e3;
    for (int m = 0; m < 2; ++m) {
      char line[200];
      std::snprintf(line, sizeof(line), "%6zu  %4zu  %12zu  %11s  %16s  %-10s  %8s\n", r.config.buffer_size,
                    r.config.detections_per_batch, r.tracker_only_per_batch, text::format_fixed(provider_ms, 1).c_str(),
                    text::format_fixed(floor_ms, 1).c_str(), m == 0 ? "sequential" : "pipelined",
                    text::format_fixed(m == 0 ? r.sequential_fps : r.pipelined_fps, 2).c_str());
      out << line;
    }
    out << "        speedup " << text::format_fixed(r.ratio, 3) << "x\n";
  }
}

void write_bench_kv(std::ostream& out, std::span<const BenchRow> rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const BenchRow& r = rows[i];
    const std::string p = "case." + std::to_string(i) + ".";
    out << p << "buffer_size=" << r.config.buffer_size << '\n'
        << p << "detections_per_batch=" << r.config.detections_per_batch << '\n'
        << p << "tracker_only_per_batch=" << r.tracker_only_per_batch << '\n'
        << p << "provider_latency_ms=" << text::format_fixed(r.config.provider_latency.count() / 1e3, 3) << '\n'
        << p << "tracker_floor_ms=" << text::format_fixed(r.config.tracker_floor.count() / 1e3, 3) << '\n'
        << p << "sequential_fps=" << text::format_fixed(r.sequential_fps, 3) << '\n'
        << p << "pipelined_fps=" << text::format_fixed(r.pipelined_fps, 3) << '\n'
        << p << "ratio=" << text::format_fixed(r.ratio, 4) << '\n';
  }
}

}  // namespace pflow
