#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pflow/bbox.hpp"
#include "pflow/detect.hpp"
#include "pflow/flow.hpp"
#include "pflow/imgproc.hpp"

namespace pflow {

enum class TrackState : std::uint8_t { kActive, kLost, kDead };

struct HistoryEntry {
  FrameIndex frame = 0;
  double cx = 0.0;
  double cy = 0.0;
};

struct Track {
  int id = 0;
  TrackState state = TrackState::kActive;
  BBox box;
  std::vector<Point2f> points;
  std::vector<HistoryEntry> history;  // one entry per detection frame while active
  int miss_count = 0;
  FrameIndex lost_since = -1;  // valid in kLost and kDead
  double confidence = 0.0;     // of the last matched detection
  bool needs_reseed = false;
};

struct TrackerConfig {
  int miss_threshold = 5;          // consecutive detection-frame misses before a track is lost
  double lost_memory_s = 5.0;      // how long a lost track may be recovered
  double recovery_radius = 200.0;  // px in the native raster
  double raster_scale = 0.4;       // processing width / native width (512 / 1280)
  double iou_match_threshold = 0.3;
  double confidence_threshold = 0.10;
  double fps = 25.0;
  int gradient_window = 5;  // history entries used for the motion direction
  std::size_t min_flow_points = 3;
  CornerParams corners;
  FlowParams flow;

  double effective_recovery_radius() const noexcept { return recovery_radius * raster_scale; }
  FrameIndex lost_memory_frames() const;
  // Throws ConfigError naming the offending field.
  void validate() const;
};

enum class EventKind : std::uint8_t { kSpawn, kMatch, kMiss, kLost, kRecover, kDead };

struct TrackEvent {
  FrameIndex frame = 0;
  EventKind kind = EventKind::kSpawn;
  int track_id = 0;
  BBox box;

  friend bool operator==(const TrackEvent&, const TrackEvent&) = default;
};

std::string_view to_string(EventKind kind) noexcept;
std::optional<EventKind> event_kind_from_string(std::string_view s) noexcept;

// "frame kind id x y w h", box values with three decimals.
std::string format_event(const TrackEvent& e);
void write_event_log(std::ostream& out, std::span<const TrackEvent> events);
// Throws ParseError with the offending line number.
std::vector<TrackEvent> parse_event_log(std::istream& in, const std::string& source_name = "<events>");

struct TrackPrediction {
  int id = 0;
  BBox box;
};

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (track index, detection index)
  std::vector<std::size_t> unmatched_tracks;
  std::vector<std::size_t> unmatched_detections;
};

// Greedy one-to-one matching in descending score; ties broken by lower track
// id, then lower detection index. Scores below threshold never match.
// scores[t][d] for tracks in the order of track_ids.
Assignment greedy_assign(const std::vector<std::vector<double>>& scores, std::span<const int> track_ids,
                         std::size_t detection_count, double threshold);
Assignment match_detections(std::span<const TrackPrediction> tracks, std::span<const Detection> dets,
                            double iou_threshold);

// Unit vector of the mean velocity over the last `window` history entries;
// empty with fewer than two entries or under 1 px of total displacement.
std::optional<Displacement> gradient_of(const Track& track, int window = 5);

// Distance from p to the ray starting at origin along unit direction dir.
double ray_distance(double px, double py, double ox, double oy, const Displacement& dir) noexcept;

// Lost-track recovery test for a single detection. Candidates lie within the
// recovery radius of the track's last centre or in the quarter-plane its
// gradient points to; the shortest perpendicular distance to the gradient ray
// wins (plain distance when there is no gradient), ties to the lower id.
std::optional<int> try_recover_lost(std::span<const Track> lost, const Detection& det, FrameIndex current_frame,
                                    const TrackerConfig& cfg);

struct TrackBox {
  int id = 0;
  BBox box;
  double confidence = 0.0;

  friend bool operator==(const TrackBox&, const TrackBox&) = default;
};

// Owns all track state. Not thread-safe; driven by exactly one thread.
class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg);

  // Advances every active track's points from prev to next and translates its
  // box by the median point displacement.
  void propagate_tracker_frame(const Pyramid& prev, const Pyramid& next);

  // dets must already be confidence-gated. image is the current frame.
  void on_detection_frame(FrameIndex frame, const GrayImage& image, std::span<const Detection> dets);

  void purge_expired(FrameIndex frame);

  // One frame of the timeline: flow from the previous frame, purge, then the
  // detection update when dets is non-null (dets are gated here).
  void step(FrameIndex frame, Pyramid pyramid, const std::vector<Detection>* dets);

  std::vector<TrackBox> active_boxes() const;
  const std::vector<Track>& tracks() const noexcept { return tracks_; }
  const TrackerConfig& config() const noexcept { return cfg_; }

  const std::vector<TrackEvent>& events() const noexcept { return events_; }
  std::vector<TrackEvent> take_events();

  // Test hook: insert a track in the given state with a fresh id.
  int add_track_for_test(Track track);

 private:
  void seed_points(Track& t, const GrayImage& image) const;
  void emit(FrameIndex frame, EventKind kind, const Track& t);

  TrackerConfig cfg_;
  std::vector<Track> tracks_;  // sorted by id
  std::vector<TrackEvent> events_;
  std::optional<Pyramid> prev_;
  int next_id_ = 1;
};

}  // namespace pflow
