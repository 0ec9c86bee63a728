#include "pflow/track.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "pflow/error.hpp"
#include "pflow/text.hpp"

namespace pflow {

FrameIndex TrackerConfig::lost_memory_frames() const {
  return static_cast<FrameIndex>(std::ceil(lost_memory_s * fps - 1e-9));
}

void TrackerConfig::validate() const {
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) {
      throw ConfigError(key, what);
    }
  };
  require(miss_threshold >= 1, "tracker.miss_threshold", "must be >= 1");
  require(lost_memory_s >= 0.0, "tracker.lost_memory_s", "must be >= 0");
  require(recovery_radius >= 0.0, "tracker.recovery_radius", "must be >= 0");
  require(raster_scale > 0.0, "tracker.raster_scale", "must be > 0");
  require(iou_match_threshold >= 0.0 && iou_match_threshold <= 1.0, "tracker.iou_match_threshold",
          "must lie in [0, 1]");
  require(confidence_threshold >= 0.0 && confidence_threshold <= 1.0, "tracker.confidence_threshold",
          "must lie in [0, 1]");
  require(fps > 0.0, "tracker.fps", "must be > 0");
  require(gradient_window >= 2, "tracker.gradient_window", "must be >= 2");
  require(corners.max_corners >= 1, "tracker.max_corners", "must be >= 1");
  require(corners.quality > 0.0 && corners.quality < 1.0, "tracker.corner_quality", "must lie in (0, 1)");
  require(corners.min_distance >= 0.0, "tracker.corner_min_distance", "must be >= 0");
  require(flow.window >= 5 && flow.window % 2 == 1, "tracker.flow_window", "must be odd and >= 5");
  require(flow.levels >= 1, "tracker.flow_levels", "must be >= 1");
  require(flow.max_iters >= 1, "tracker.flow_max_iters", "must be >= 1");
  require(flow.eps > 0.0, "tracker.flow_eps", "must be > 0");
}

std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::kSpawn:
      return "spawn";
    case EventKind::kMatch:
      return "match";
    case EventKind::kMiss:
      return "miss";
    case EventKind::kLost:
      return "lost";
    case EventKind::kRecover:
      return "recover";
    case EventKind::kDead:
      return "dead";
  }
  return "?";
}

std::optional<EventKind> event_kind_from_string(std::string_view s) noexcept {
  for (auto k : {EventKind::kSpawn, EventKind::kMatch, EventKind::kMiss, EventKind::kLost, EventKind::kRecover,
                 EventKind::kDead}) {
    if (to_string(k) == s) {
      return k;
    }
  }
  return std::nullopt;
}

std::string format_event(const TrackEvent& e) {
  std::string s = std::to_string(e.frame);
  s += ' ';
  s += to_string(e.kind);
  s += ' ';
  s += std::to_string(e.track_id);
  for (double v : {e.box.x, e.box.y, e.box.w, e.box.h}) {
    s += ' ';
    s += text::format_fixed(v, 3);
  }
  return s;
}

void write_event_log(std::ostream& out, std::span<const TrackEvent> events) {
  for (const TrackEvent& e : events) {
    out << format_event(e) << '\n';
  }
}

std::vector<TrackEvent> parse_event_log(std::istream& in, const std::string& source_name) {
  std::vector<TrackEvent> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') {
      continue;
    }
    const auto tok = text::split_ws(trimmed);
    if (tok.size() != 7) {
      throw ParseError(source_name, line_no, "expected 'frame kind id x y w h'");
    }
    const auto frame = text::parse_int(tok[0]);
    const auto kind = event_kind_from_string(tok[1]);
    const auto id = text::parse_int(tok[2]);
    if (!frame || *frame < 0 || !kind || !id || *id <= 0) {
      throw ParseError(source_name, line_no, "malformed frame, event kind or track id");
    }
    TrackEvent e{static_cast<FrameIndex>(*frame), *kind, static_cast<int>(*id), {}};
    double* fields[] = {&e.box.x, &e.box.y, &e.box.w, &e.box.h};
    for (std::size_t k = 0; k < 4; ++k) {
      const auto v = text::parse_double(tok[3 + k]);
      if (!v) {
        throw ParseError(source_name, line_no, "malformed box value '" + std::string(tok[3 + k]) + "'");
      }
      *fields[k] = *v;
    }
    out.push_back(e);
  }
  return out;
}

Assignment greedy_assign(const std::vector<std::vector<double>>& scores, std::span<const int> track_ids,
                         std::size_t detection_count, double threshold) {
  struct Pair {
    double score;
    int track_id;
    std::size_t t;
    std::size_t d;
  };
  std::vector<Pair> pairs;
  for (std::size_t t = 0; t < scores.size(); ++t) {
    for (std::size_t d = 0; d < detection_count; ++d) {
      if (scores[t][d] >= threshold && scores[t][d] > 0.0) {
        pairs.push_back({scores[t][d], track_ids[t], t, d});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.score != b.score) {
      return a.score > b.score;
    }
    if (a.track_id != b.track_id) {
      return a.track_id < b.track_id;
    }
    return a.d < b.d;
  });
  std::vector<bool> track_used(scores.size(), false);
  std::vector<bool> det_used(detection_count, false);
  Assignment out;
  for (const Pair& p : pairs) {
    if (!track_used[p.t] && !det_used[p.d]) {
      track_used[p.t] = true;
      det_used[p.d] = true;
      out.pairs.emplace_back(p.t, p.d);
    }
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (std::size_t t = 0; t < scores.size(); ++t) {
    if (!track_used[t]) {
      out.unmatched_tracks.push_back(t);
    }
  }
  for (std::size_t d = 0; d < detection_count; ++d) {
    if (!det_used[d]) {
      out.unmatched_detections.push_back(d);
    }
  }
  return out;
}

Assignment match_detections(std::span<const TrackPrediction> tracks, std::span<const Detection> dets,
                            double iou_threshold) {
  std::vector<std::vector<double>> scores(tracks.size(), std::vector<double>(dets.size(), 0.0));
  std::vector<int> ids;
  ids.reserve(tracks.size());
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    ids.push_back(tracks[t].id);
    for (std::size_t d = 0; d < dets.size(); ++d) {
      scores[t][d] = iou(tracks[t].box, dets[d].box);
    }
  }
  return greedy_assign(scores, ids, dets.size(), iou_threshold);
}

std::optional<Displacement> gradient_of(const Track& track, int window) {
  const auto& h = track.history;
  if (h.size() < 2 || window < 2) {
    return std::nullopt;
  }
  const std::size_t n = std::min(h.size(), static_cast<std::size_t>(window));
  const HistoryEntry& first = h[h.size() - n];
  const HistoryEntry& last = h.back();
  // The mean of the step vectors telescopes to (last - first) / (n - 1).
  const double dx = last.cx - first.cx;
  const double dy = last.cy - first.cy;
  const double norm = std::hypot(dx, dy);
  if (norm < 1.0) {
    return std::nullopt;
  }
  return Displacement{dx / norm, dy / norm};
}

double ray_distance(double px, double py, double ox, double oy, const Displacement& dir) noexcept {
  const double rx = px - ox;
  const double ry = py - oy;
  const double t = rx * dir.dx + ry * dir.dy;
  if (t <= 0.0) {
    return std::hypot(rx, ry);
  }
  return std::hypot(rx - t * dir.dx, ry - t * dir.dy);
}

namespace {

bool sign_agrees(double delta, double component) {
  if (component > 0.0) {
    return delta > 0.0;
  }
  if (component < 0.0) {
    return delta < 0.0;
  }
  return true;
}

// Ranking distance when det may recover t, otherwise empty.
std::optional<double> recovery_distance(const Track& t, const BBox& det, const TrackerConfig& cfg) {
  const double ax = t.box.cx();
  const double ay = t.box.cy();
  const double dx = det.cx() - ax;
  const double dy = det.cy() - ay;
  const auto grad = gradient_of(t, cfg.gradient_window);
  const bool in_radius = std::hypot(dx, dy) <= cfg.effective_recovery_radius();
  const bool in_quadrant = grad && sign_agrees(dx, grad->dx) && sign_agrees(dy, grad->dy);
  if (!in_radius && !in_quadrant) {
    return std::nullopt;
  }
  return grad ? ray_distance(det.cx(), det.cy(), ax, ay, *grad) : std::hypot(dx, dy);
}

bool recoverable(const Track& t, FrameIndex frame, const TrackerConfig& cfg) {
  return t.state == TrackState::kLost && frame - t.lost_since <= cfg.lost_memory_frames();
}

}  // namespace

std::optional<int> try_recover_lost(std::span<const Track> lost, const Detection& det, FrameIndex current_frame,
                                    const TrackerConfig& cfg) {
  std::optional<int> best_id;
  double best = std::numeric_limits<double>::infinity();
  for (const Track& t : lost) {
    if (!recoverable(t, current_frame, cfg)) {
      continue;
    }
    const auto d = recovery_distance(t, det.box, cfg);
    if (d && (*d < best || (*d == best && t.id < *best_id))) {
      best = *d;
      best_id = t.id;
    }
  }
  return best_id;
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

void Tracker::emit(FrameIndex frame, EventKind kind, const Track& t) {
  events_.push_back({frame, kind, t.id, t.box});
}

void Tracker::seed_points(Track& t, const GrayImage& image) const {
  t.points.clear();
  if (corner_roi_usable(image, t.box)) {
    t.points = shi_tomasi_corners(image, t.box, cfg_.corners);
  }
  t.needs_reseed = t.points.size() < cfg_.min_flow_points;
}

void Tracker::propagate_tracker_frame(const Pyramid& prev, const Pyramid& next) {
  // One flow call over all tracks' points; per-point results are independent
  // of batching, so this equals tracking each track separately.
  std::vector<Point2f> all;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // (offset, count) per track
  for (const Track& t : tracks_) {
    spans.emplace_back(all.size(), t.state == TrackState::kActive ? t.points.size() : 0);
    if (t.state == TrackState::kActive) {
      all.insert(all.end(), t.points.begin(), t.points.end());
    }
  }
  if (all.empty()) {
    for (Track& t : tracks_) {
      if (t.state == TrackState::kActive) {
        t.needs_reseed = true;
      }
    }
    return;
  }
  const FlowResult flow = lk_track(prev, next, all, cfg_.flow);
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    Track& t = tracks_[i];
    if (t.state != TrackState::kActive) {
      continue;
    }
    const auto [offset, count] = spans[i];
    FlowResult part;
    part.points_next.assign(flow.points_next.begin() + static_cast<std::ptrdiff_t>(offset),
                            flow.points_next.begin() + static_cast<std::ptrdiff_t>(offset + count));
    part.status.assign(flow.status.begin() + static_cast<std::ptrdiff_t>(offset),
                       flow.status.begin() + static_cast<std::ptrdiff_t>(offset + count));
    part.residual.assign(flow.residual.begin() + static_cast<std::ptrdiff_t>(offset),
                         flow.residual.begin() + static_cast<std::ptrdiff_t>(offset + count));
    const auto d = median_displacement(t.points, part, cfg_.min_flow_points);
    std::vector<Point2f> survivors;
    for (std::size_t k = 0; k < count; ++k) {
      if (part.tracked(k)) {
        survivors.push_back(part.points_next[k]);
      }
    }
    t.points = std::move(survivors);
    if (d) {
      t.box = t.box.translated(d->dx, d->dy);
    } else {
      t.needs_reseed = true;
    }
  }
}

void Tracker::on_detection_frame(FrameIndex frame, const GrayImage& image, std::span<const Detection> dets) {
  std::vector<std::size_t> active;
  std::vector<TrackPrediction> predictions;
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    if (tracks_[i].state == TrackState::kActive) {
      active.push_back(i);
      predictions.push_back({tracks_[i].id, tracks_[i].box});
    }
  }
  const Assignment assignment = match_detections(predictions, dets, cfg_.iou_match_threshold);

  for (const auto& [p, d] : assignment.pairs) {
    Track& t = tracks_[active[p]];
    t.box = dets[d].box;
    t.confidence = dets[d].confidence;
    t.miss_count = 0;
    t.history.push_back({frame, t.box.cx(), t.box.cy()});
    seed_points(t, image);
    emit(frame, EventKind::kMatch, t);
  }
  for (std::size_t p : assignment.unmatched_tracks) {
    // The flow proposal stands in for the missing detection.
    Track& t = tracks_[active[p]];
    ++t.miss_count;
    t.history.push_back({frame, t.box.cx(), t.box.cy()});
    if (t.needs_reseed) {
      seed_points(t, image);
    }
    emit(frame, EventKind::kMiss, t);
    if (t.miss_count >= cfg_.miss_threshold) {
      t.state = TrackState::kLost;
      t.lost_since = frame;
      t.points.clear();
      emit(frame, EventKind::kLost, t);
    }
  }

  // Lost-track recovery: every admissible (track, detection) pair ranked by
  // distance to the track's gradient ray, assigned greedily one-to-one.
  struct Candidate {
    double distance;
    int id;
    std::size_t track;
    std::size_t det;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    if (!recoverable(tracks_[i], frame, cfg_)) {
      continue;
    }
    for (std::size_t d : assignment.unmatched_detections) {
      if (const auto dist = recovery_distance(tracks_[i], dets[d].box, cfg_)) {
        candidates.push_back({*dist, tracks_[i].id, i, d});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.distance != b.distance) {
      return a.distance < b.distance;
    }
    if (a.id != b.id) {
      return a.id < b.id;
    }
    return a.det < b.det;
  });
  std::vector<bool> det_taken(dets.size(), false);
  for (const Candidate& c : candidates) {
    Track& t = tracks_[c.track];
    if (t.state != TrackState::kLost || det_taken[c.det]) {
      continue;
    }
    det_taken[c.det] = true;
    t.state = TrackState::kActive;
    t.box = dets[c.det].box;
    t.confidence = dets[c.det].confidence;
    t.miss_count = 0;
    t.lost_since = -1;
    t.history.assign(1, {frame, t.box.cx(), t.box.cy()});
    seed_points(t, image);
    emit(frame, EventKind::kRecover, t);
  }

  for (std::size_t d : assignment.unmatched_detections) {
    if (det_taken[d]) {
      continue;
    }
    Track t;
    t.id = next_id_++;
    t.box = dets[d].box;
    t.confidence = dets[d].confidence;
    t.history.push_back({frame, t.box.cx(), t.box.cy()});
    seed_points(t, image);
    tracks_.push_back(std::move(t));
    emit(frame, EventKind::kSpawn, tracks_.back());
  }
}

void Tracker::purge_expired(FrameIndex frame) {
  const FrameIndex memory = cfg_.lost_memory_frames();
  for (Track& t : tracks_) {
    if (t.state == TrackState::kLost && frame - t.lost_since > memory) {
      t.state = TrackState::kDead;
      emit(frame, EventKind::kDead, t);
    }
  }
}

void Tracker::step(FrameIndex frame, Pyramid pyramid, const std::vector<Detection>* dets) {
  if (prev_) {
    propagate_tracker_frame(*prev_, pyramid);
  }
  purge_expired(frame);
  if (dets != nullptr) {
    const auto gated = confidence_gate(*dets, cfg_.confidence_threshold);
    on_detection_frame(frame, pyramid.base(), gated);
  }
  prev_ = std::move(pyramid);
}

std::vector<TrackBox> Tracker::active_boxes() const {
  std::vector<TrackBox> out;
  for (const Track& t : tracks_) {
    if (t.state == TrackState::kActive) {
      out.push_back({t.id, t.box, t.confidence});
    }
  }
  return out;
}

std::vector<TrackEvent> Tracker::take_events() {
  std::vector<TrackEvent> out;
  out.swap(events_);
  return out;
}

int Tracker::add_track_for_test(Track track) {
  track.id = next_id_++;
  tracks_.push_back(std::move(track));
  return tracks_.back().id;
}

}  // namespace pflow
