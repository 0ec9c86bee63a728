#include <gtest/gtest.h>

#include <sstream>

#include "pflow/eval.hpp"

namespace pflow {
namespace {

DetectionTable table_of(FrameIndex frames, std::vector<std::pair<FrameIndex, Detection>> items) {
  DetectionTable t(frames);
  for (auto& [f, d] : items) {
    t.at(f).push_back(d);
  }
  return t;
}

TEST(PrCurve, HandWorkedExample) {
  // Ranked: TP, FP, TP, TP against three truths. AP = (1 + 2/3 + 3/4) / 3 = 29/36.
  const DetectionTable truth = table_of(1, {{0, {{0, 0, 10, 10}, 1}}, {0, {{20, 0, 10, 10}, 1}},
                                            {0, {{40, 0, 10, 10}, 1}}});
  const DetectionTable pred = table_of(1, {{0, {{41, 0, 10, 10}, 0.6}}, {0, {{0, 0, 10, 10}, 0.9}},
                                           {0, {{100, 100, 5, 5}, 0.8}}, {0, {{21, 1, 10, 10}, 0.7}}});
  const PRCurve c = pr_curve(pred, truth);
  EXPECT_EQ(c.true_positive, (std::vector<bool>{true, false, true, true}));
  EXPECT_EQ(c.truth_count, 3U);
  EXPECT_DOUBLE_EQ(c.ap, 29.0 / 36.0);
  ASSERT_EQ(c.points.size(), 4U);
  EXPECT_DOUBLE_EQ(c.points[1].precision, 0.5);
  EXPECT_DOUBLE_EQ(c.points[3].recall, 1.0);
}

TEST(PrCurve, PerfectPredictionsGiveExactlyOne) {
  DetectionTable truth(7);
  for (FrameIndex f = 0; f < 7; ++f) {
    for (int k = 0; k < 10; ++k) {
      truth.at(f).push_back({{k * 20.0, f * 3.0, 12, 30}, 1.0});
    }
  }
  EXPECT_EQ(pr_curve(truth, truth).ap, 1.0);
}

TEST(PrCurve, DuplicateClaimsOnlyOnce) {
  const DetectionTable truth = table_of(1, {{0, {{0, 0, 10, 10}, 1}}});
  const DetectionTable pred = table_of(1, {{0, {{0, 0, 10, 10}, 0.9}}, {0, {{0, 0, 10, 10}, 0.8}}});
  const PRCurve c = pr_curve(pred, truth);
  EXPECT_EQ(c.true_positive, (std::vector<bool>{true, false}));
  EXPECT_DOUBLE_EQ(c.ap, 1.0);
}

TEST(PrCurve, TiesRankByFrameThenIndex) {
  const DetectionTable truth = table_of(2, {{1, {{0, 0, 10, 10}, 1}}});
  // Equal confidence: frame 0's miss ranks first, then frame 1's hit.
  const DetectionTable pred = table_of(2, {{0, {{50, 50, 10, 10}, 0.5}}, {1, {{0, 0, 10, 10}, 0.5}}});
  const PRCurve c = pr_curve(pred, truth);
  EXPECT_EQ(c.true_positive, (std::vector<bool>{false, true}));
  EXPECT_DOUBLE_EQ(c.ap, 0.5);
}

TEST(PrCurve, IouBoundaryAndEdgeCases) {
  const DetectionTable truth = table_of(1, {{0, {{0, 0, 10, 10}, 1}}});
  const DetectionTable half = table_of(1, {{0, {{5, 0, 10, 10}, 0.9}}});  // IoU 1/3
  EXPECT_EQ(pr_curve(half, truth, 0.5).ap, 0.0);
  EXPECT_EQ(pr_curve(half, truth, 1.0 / 3.0).ap, 1.0);
  EXPECT_EQ(pr_curve(DetectionTable(1), truth).ap, 0.0);
  EXPECT_EQ(pr_curve(half, DetectionTable(1)).ap, 0.0);
  EXPECT_THROW(pr_curve(half, truth, 0.0), std::invalid_argument);
  EXPECT_THROW(pr_curve(half, truth, 1.0), std::invalid_argument);
}

TEST(PrCurve, WrittenWithApLine) {
  const DetectionTable truth = table_of(1, {{0, {{0, 0, 10, 10}, 1}}});
  std::ostringstream out;
  write_pr_curve(out, pr_curve(truth, truth));
  EXPECT_EQ(out.str(), "# recall precision\n1.000000 1.000000\nAP 1.000000\n");
}

TEST(IdSwitches, CountsChangesOfBestTrack) {
  std::vector<GroundTruthFrame> truth(4);
  for (auto& f : truth) {
    f.push_back({1, {0, 0, 10, 10}, 1.0});
  }
  TrackObservations obs;
  obs[0] = {{5, {0, 0, 10, 10}, 0.9}};
  obs[1] = {{5, {1, 0, 10, 10}, 0.9}};
  obs[2] = {{8, {0, 0, 10, 10}, 0.9}};
  obs[3] = {{5, {50, 50, 10, 10}, 0.9}, {8, {0, 1, 10, 10}, 0.9}};
  const IdSwitchReport r = id_switches(obs, truth);
  EXPECT_EQ(r.switches, 1U);
  EXPECT_EQ(r.per_agent.at(1), 1U);
  EXPECT_EQ(r.distinct_track_ids, 2U);
}

TEST(IdSwitches, UnmatchedFramesDoNotBreakAssociation) {
  std::vector<GroundTruthFrame> truth(3, GroundTruthFrame{{2, {0, 0, 10, 10}, 1.0}});
  TrackObservations obs;
  obs[0] = {{1, {0, 0, 10, 10}, 1}};
  obs[1] = {};
  obs[2] = {{1, {0, 0, 10, 10}, 1}};
  EXPECT_EQ(id_switches(obs, truth).switches, 0U);
}

TEST(EvalHarness, DetectorInputAndTrackTableFromRun) {
  const SyntheticScene scene = demo_scene(24);
  SceneFrameSource source(scene);
  ScriptedProvider provider(scene, DropPlan{});
  const RunRecord rec = run_and_record(source, provider, PipelineConfig{}, TrackerConfig{});
  const DetectorEvalInput in = detector_eval_input(scene, rec.frames);
  EXPECT_EQ(in.predictions.total(), 24U);  // 8 detection frames x 3 agents
  EXPECT_EQ(in.truth.total(), 24U);
  EXPECT_EQ(pr_curve(in.predictions, in.truth).ap, 1.0);
  const DetectionTable tracks = track_table(rec.frames, 24);
  EXPECT_EQ(tracks.total(), 72U);
  EXPECT_EQ(observations_from_frames(rec.frames).size(), 24U);
  EXPECT_FALSE(observations_from_events(rec.events).empty());
}

TEST(EvalHarness, SweepProducesOneRowPerThreshold) {
  const SyntheticScene scene = demo_scene(48);
  DropPlan plan;
  plan.drops.push_back({1, 6, 30});
  const std::vector<int> thresholds{2, 10};
  const auto rows = miss_threshold_sweep(scene, plan, PipelineConfig{}, TrackerConfig{}, thresholds);
  ASSERT_EQ(rows.size(), 2U);
  EXPECT_EQ(rows[0].miss_threshold, 2);
  EXPECT_EQ(rows[1].miss_threshold, 10);
  EXPECT_LT(rows[0].detector_ap, 1.0);
  EXPECT_EQ(rows[0].detector_ap, rows[1].detector_ap);
  std::ostringstream out;
  write_sweep_table(out, rows);
  EXPECT_NE(out.str().find("tracker_ap"), std::string::npos);
  EXPECT_NE(out.str().find("id_switches"), std::string::npos);
}

}  // namespace
}  // namespace pflow
