#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "pflow/error.hpp"
#include "pflow/providers.hpp"
#include "pflow/track.hpp"

namespace pflow {
namespace {

TEST(GreedyAssign, HighestScoreFirstNotGlobalOptimum) {
  // Optimal assignment would pair (1,d1) and (2,d0); greedy takes 0.9 first.
  const std::vector<std::vector<double>> scores{{0.9, 0.8, 0.0}, {0.85, 0.2, 0.0}, {0.0, 0.0, 0.1}};
  const std::vector<int> ids{1, 2, 3};
  const Assignment a = greedy_assign(scores, ids, 3, 0.3);
  ASSERT_EQ(a.pairs.size(), 1U);
  EXPECT_EQ(a.pairs[0], (std::pair<std::size_t, std::size_t>{0, 0}));
  EXPECT_EQ(a.unmatched_tracks, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(a.unmatched_detections, (std::vector<std::size_t>{1, 2}));
}

TEST(GreedyAssign, TiesGoToLowerTrackIdThenLowerDetection) {
  const std::vector<std::vector<double>> scores{{0.5, 0.5}, {0.5, 0.5}};
  const std::vector<int> ids{7, 3};  // row 1 holds the lower id
  const Assignment a = greedy_assign(scores, ids, 2, 0.3);
  ASSERT_EQ(a.pairs.size(), 2U);
  EXPECT_EQ(a.pairs[0], (std::pair<std::size_t, std::size_t>{0, 1}));
  EXPECT_EQ(a.pairs[1], (std::pair<std::size_t, std::size_t>{1, 0}));
}

TEST(GreedyAssign, ThresholdIsInclusiveButZeroNeverMatches) {
  const std::vector<std::vector<double>> scores{{0.3}, {0.0}};
  const std::vector<int> ids{1, 2};
  EXPECT_EQ(greedy_assign(scores, ids, 1, 0.3).pairs.size(), 1U);
  const std::vector<std::vector<double>> zero{{0.0}};
  const std::vector<int> one{1};
  EXPECT_TRUE(greedy_assign(zero, one, 1, 0.0).pairs.empty());
}

TEST(MatchDetections, UsesIou) {
  const std::vector<TrackPrediction> tracks{{1, {0, 0, 10, 10}}, {2, {100, 100, 10, 10}}};
  const std::vector<Detection> dets{{{101, 100, 10, 10}, 0.9}, {{5, 0, 10, 10}, 0.9}, {{50, 50, 5, 5}, 0.9}};
  const Assignment a = match_detections(tracks, dets, 0.3);
  ASSERT_EQ(a.pairs.size(), 2U);
  EXPECT_EQ(a.pairs[0], (std::pair<std::size_t, std::size_t>{0, 1}));
  EXPECT_EQ(a.pairs[1], (std::pair<std::size_t, std::size_t>{1, 0}));
  EXPECT_EQ(a.unmatched_detections, (std::vector<std::size_t>{2}));
}

TEST(RayDistance, PerpendicularAheadEuclideanBehind) {
  const Displacement right{1.0, 0.0};
  EXPECT_DOUBLE_EQ(ray_distance(10, 3, 0, 0, right), 3.0);
  EXPECT_DOUBLE_EQ(ray_distance(-3, 4, 0, 0, right), 5.0);
  const Displacement diag{std::sqrt(0.5), std::sqrt(0.5)};
  EXPECT_NEAR(ray_distance(2, 0, 0, 0, diag), std::sqrt(2.0), 1e-12);
}

Track with_history(std::vector<std::pair<double, double>> centres) {
  Track t;
  for (std::size_t i = 0; i < centres.size(); ++i) {
    t.history.push_back({static_cast<FrameIndex>(3 * i), centres[i].first, centres[i].second});
  }
  const auto& last = centres.back();
  t.box = BBox::from_center(last.first, last.second, 20, 40);
  return t;
}

TEST(GradientOf, LastWindowEntriesNormalised) {
  const Track t = with_history({{0, 0}, {100, 100}, {0, 0}, {3, 0}, {6, 4}, {9, 4}, {12, 8}});
  const auto g = gradient_of(t, 5);
  ASSERT_TRUE(g);
  // Last five entries run from (0,0) to (12,8).
  EXPECT_NEAR(g->dx, 12.0 / std::hypot(12.0, 8.0), 1e-12);
  EXPECT_NEAR(g->dy, 8.0 / std::hypot(12.0, 8.0), 1e-12);
}

TEST(GradientOf, NothingForShortOrStationaryHistory) {
  EXPECT_FALSE(gradient_of(with_history({{5, 5}})));
  EXPECT_FALSE(gradient_of(with_history({{5, 5}, {5.5, 5.5}})));
}

TrackerConfig default_cfg() {
  TrackerConfig cfg;
  cfg.fps = 25.0;
  cfg.lost_memory_s = 5.0;
  return cfg;
}

Track lost_track(int id, std::vector<std::pair<double, double>> centres, FrameIndex since) {
  Track t = with_history(std::move(centres));
  t.id = id;
  t.state = TrackState::kLost;
  t.lost_since = since;
  return t;
}

TEST(TrackerConfig, DerivedQuantities) {
  const TrackerConfig cfg = default_cfg();
  EXPECT_DOUBLE_EQ(cfg.effective_recovery_radius(), 80.0);
  EXPECT_EQ(cfg.lost_memory_frames(), 125);
  TrackerConfig bad = cfg;
  bad.miss_threshold = 0;
  try {
    bad.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "tracker.miss_threshold");
  }
}

TEST(TryRecoverLost, RadiusOrGradientQuadrant) {
  const TrackerConfig cfg = default_cfg();
  const std::vector<Track> lost{lost_track(4, {{60, 100}, {70, 100}, {80, 100}, {90, 100}, {100, 100}}, 10)};
  auto det_at = [](double cx, double cy) { return Detection{BBox::from_center(cx, cy, 20, 40), 0.9}; };
  EXPECT_EQ(try_recover_lost(lost, det_at(300, 104), 20, cfg), 4);  // far but ahead
  EXPECT_EQ(try_recover_lost(lost, det_at(20, 100), 20, cfg), 4);   // behind, radius 80
  EXPECT_FALSE(try_recover_lost(lost, det_at(10, 100), 20, cfg));   // behind, beyond radius
  EXPECT_FALSE(try_recover_lost(lost, det_at(300, 104), 136, cfg));  // memory expired
}

TEST(TryRecoverLost, ShortestRayDistanceWinsTiesToLowerId) {
  const TrackerConfig cfg = default_cfg();
  const std::vector<Track> lost{lost_track(9, {{0, 50}, {40, 50}}, 10), lost_track(5, {{0, 60}, {40, 60}}, 10)};
  const Detection near9{BBox::from_center(200, 52, 20, 40), 0.9};
  EXPECT_EQ(try_recover_lost(lost, near9, 12, cfg), 9);
  const Detection between{BBox::from_center(200, 55, 20, 40), 0.9};
  EXPECT_EQ(try_recover_lost(lost, between, 12, cfg), 5);
}

TEST(Tracker, PurgeHappensStrictlyAfterMemory) {
  Tracker tracker(default_cfg());
  Track t;
  t.state = TrackState::kLost;
  t.lost_since = 100;
  t.box = {10, 10, 20, 40};
  const int id = tracker.add_track_for_test(t);
  tracker.purge_expired(225);
  EXPECT_EQ(tracker.tracks()[0].state, TrackState::kLost);
  EXPECT_TRUE(tracker.events().empty());
  tracker.purge_expired(226);
  EXPECT_EQ(tracker.tracks()[0].state, TrackState::kDead);
  ASSERT_EQ(tracker.events().size(), 1U);
  EXPECT_EQ(tracker.events()[0].kind, EventKind::kDead);
  EXPECT_EQ(tracker.events()[0].track_id, id);
  EXPECT_EQ(tracker.events()[0].frame, 226);
}

TEST(Tracker, RecoveryRestoresIdAndResetsHistory) {
  TrackerConfig cfg = default_cfg();
  Tracker tracker(cfg);
  Track t = lost_track(0, {{60, 100}, {70, 100}, {80, 100}}, 30);
  const int id = tracker.add_track_for_test(t);
  const GrayImage img(256, 200, 90);
  const std::vector<Detection> dets{{BBox::from_center(150, 102, 20, 40), 0.8}};
  tracker.on_detection_frame(40, img, dets);
  ASSERT_EQ(tracker.tracks().size(), 1U);
  const Track& r = tracker.tracks()[0];
  EXPECT_EQ(r.id, id);
  EXPECT_EQ(r.state, TrackState::kActive);
  EXPECT_EQ(r.history.size(), 1U);
  EXPECT_EQ(r.box, dets[0].box);
  ASSERT_EQ(tracker.events().size(), 1U);
  EXPECT_EQ(tracker.events()[0].kind, EventKind::kRecover);
}

TEST(Tracker, GateIsAppliedInStep) {
  Tracker tracker(default_cfg());
  const std::vector<Detection> dets{{{10, 10, 20, 40}, 0.10}, {{100, 10, 20, 40}, 0.11}};
  tracker.step(0, build_pyramid(GrayImage(200, 100, 50), 3), &dets);
  ASSERT_EQ(tracker.tracks().size(), 1U);
  EXPECT_EQ(tracker.tracks()[0].box, dets[1].box);
}

// Drives a tracker over a rendered scene, detections every third frame.
std::vector<TrackEvent> drive(const SyntheticScene& scene, const DropPlan& plan, const TrackerConfig& cfg) {
  Tracker tracker(cfg);
  ScriptedProvider provider(scene, plan);
  std::vector<TrackEvent> events;
  for (FrameIndex f = 0; f < scene.frame_count; ++f) {
    const auto dets = provider.detections_for(f);
    tracker.step(f, build_pyramid(render_frame(scene, f), 3), f % 3 == 0 ? &dets : nullptr);
    const auto e = tracker.take_events();
    events.insert(events.end(), e.begin(), e.end());
  }
  return events;
}

TEST(Tracker, LostTrackDiesAndIdIsNeverReused) {
  const SyntheticScene scene = demo_scene(108);
  DropPlan plan;
  plan.drops.push_back({1, 12, 95});
  TrackerConfig cfg = default_cfg();
  cfg.miss_threshold = 2;
  cfg.lost_memory_s = 0.4;  // 10 frames
  const auto events = drive(scene, plan, cfg);

  auto find = [&](EventKind kind, int id) {
    return std::find_if(events.begin(), events.end(),
                        [&](const TrackEvent& e) { return e.kind == kind && e.track_id == id; });
  };
  const auto lost = find(EventKind::kLost, 1);
  ASSERT_NE(lost, events.end());
  EXPECT_EQ(lost->frame, 15);
  const auto dead = find(EventKind::kDead, 1);
  ASSERT_NE(dead, events.end());
  EXPECT_EQ(dead->frame, 26);
  for (const TrackEvent& e : events) {
    if (e.track_id == 1) {
      EXPECT_LE(e.frame, 26) << "dead id reappeared";
    }
  }
  const auto respawn = find(EventKind::kSpawn, 4);
  ASSERT_NE(respawn, events.end());
  EXPECT_EQ(respawn->frame, 96);
}

TEST(Tracker, FlowCarriesBoxesBetweenDetections) {
  const SyntheticScene scene = demo_scene(48);
  TrackerConfig cfg = default_cfg();
  Tracker tracker(cfg);
  ScriptedProvider provider(scene, DropPlan{});
  for (FrameIndex f = 0; f < 9; ++f) {
    const auto dets = provider.detections_for(f);
    tracker.step(f, build_pyramid(render_frame(scene, f), 3), f == 0 ? &dets : nullptr);
  }
  // With a single detection at frame 0, only optical flow moved the boxes.
  const auto truth = ground_truth_frame(scene, 8);
  const auto boxes = tracker.active_boxes();
  ASSERT_EQ(boxes.size(), 3U);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_GT(iou(boxes[i].box, truth[i].box), 0.9) << "track " << boxes[i].id;
  }
}

TEST(EventLog, FormatAndRoundTrip) {
  const std::vector<TrackEvent> events{{12, EventKind::kMatch, 3, {1.23456, 2, 3, 4}},
                                       {13, EventKind::kLost, 4, {-0.0001, 0, 1, 1}}};
  EXPECT_EQ(format_event(events[0]), "12 match 3 1.235 2.000 3.000 4.000");
  std::ostringstream out;
  write_event_log(out, events);
  std::istringstream in(out.str());
  const auto back = parse_event_log(in);
  ASSERT_EQ(back.size(), 2U);
  EXPECT_EQ(back[0].kind, EventKind::kMatch);
  EXPECT_DOUBLE_EQ(back[0].box.x, 1.235);
  EXPECT_EQ(back[1].kind, EventKind::kLost);
  for (EventKind k : {EventKind::kSpawn, EventKind::kMatch, EventKind::kMiss, EventKind::kLost, EventKind::kRecover,
                      EventKind::kDead}) {
    EXPECT_EQ(event_kind_from_string(to_string(k)), k);
  }
}

TEST(EventLog, MalformedLineThrowsWithLineNumber) {
  std::istringstream in("1 spawn 1 0 0 1 1\n2 bogus 1 0 0 1 1\n");
  try {
    parse_event_log(in, "ev");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2U);
  }
  std::istringstream short_line("1 spawn 1 0 0 1\n");
  EXPECT_THROW(parse_event_log(short_line), ParseError);
}

}  // namespace
}  // namespace pflow
