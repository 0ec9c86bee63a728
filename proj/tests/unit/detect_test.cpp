#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "pflow/detect.hpp"
#include "pflow/error.hpp"
#include "test_support.hpp"

namespace pflow {
namespace {

TEST(Iou, HalfOverlapOfEqualBoxesIsOneThird) {
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {5, 0, 10, 10}), 1.0 / 3.0);
}

TEST(Iou, IdentityContainmentAndDisjoint) {
  const BBox a{3, 4, 10, 20};
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {2, 2, 5, 5}), 25.0 / 100.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {10, 0, 10, 10}), 0.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {30, 30, 1, 1}), 0.0);
}

TEST(Iou, SymmetricAndBounded) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> pos(0, 50);
  std::uniform_real_distribution<double> size(0.5, 30);
  for (int i = 0; i < 500; ++i) {
    const BBox a{pos(rng), pos(rng), size(rng), size(rng)};
    const BBox b{pos(rng), pos(rng), size(rng), size(rng)};
    const double v = iou(a, b);
    EXPECT_EQ(v, iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(ConfidenceGate, StrictlyAboveThresholdKeepsOrder) {
  const std::vector<Detection> dets{{{0, 0, 1, 1}, 0.10}, {{1, 0, 1, 1}, 0.5}, {{2, 0, 1, 1}, 0.100001},
                                    {{3, 0, 1, 1}, 0.05}};
  const auto kept = confidence_gate(dets, 0.10);
  ASSERT_EQ(kept.size(), 2U);
  EXPECT_EQ(kept[0], dets[1]);
  EXPECT_EQ(kept[1], dets[2]);
}

TEST(DetectionFile, ParsesCommentsBlankLinesAndMultipleBoxes) {
  std::istringstream in(
      "# frame n x y w h conf\n"
      "\n"
      "0 2 10 20 30 40 0.9 1.5 2.5 3 4 0.25\n"
      "3 1 0 0 5 5 1\n");
  const DetectionTable t = parse_detections(in, 5);
  EXPECT_EQ(t.frame_count(), 5);
  EXPECT_EQ(t.total(), 3U);
  ASSERT_EQ(t.at(0).size(), 2U);
  EXPECT_EQ(t.at(0)[1], (Detection{{1.5, 2.5, 3, 4}, 0.25}));
  EXPECT_TRUE(t.at(1).empty());
  EXPECT_EQ(t.at(3)[0].confidence, 1.0);
}

TEST(DetectionFile, WriteParseRoundTripIsExact) {
  DetectionTable t(6);
  t.at(1).push_back({{0.1, 0.2, 10.000000001, 3.3}, 0.123456789012345});
  t.at(1).push_back({{-4, 5, 6, 7}, 0.0});
  t.at(5).push_back({{100, 200, 1e-3, 9}, 1.0});
  std::ostringstream out;
  write_detections(out, t);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_detections(in, 6), t);
}

void expect_parse_error(const std::string& text, std::size_t line) {
  std::istringstream in(text);
  try {
    parse_detections(in, 10, "dets.txt");
    FAIL() << "no error for: " << text;
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
    EXPECT_EQ(e.source(), "dets.txt");
  }
}

TEST(DetectionFile, MalformedInputReportsLine) {
  expect_parse_error("0 1 1 2 3 4\n", 1);                      // too few tokens
  expect_parse_error("0 1 1 2 3 4 0.5 9\n", 1);                // too many
  expect_parse_error("# c\n0 1 a 2 3 4 0.5\n", 2);             // not a number
  expect_parse_error("12 1 1 2 3 4 0.5\n", 1);                 // frame out of range
  expect_parse_error("-1 1 1 2 3 4 0.5\n", 1);
  expect_parse_error("2 1 1 2 3 4 0.5\n2 1 1 2 3 4 0.5\n", 2);  // duplicate frame
  expect_parse_error("2 1 1 2 0 4 0.5\n", 1);                  // zero width
  expect_parse_error("2 1 1 2 3 4 1.5\n", 1);                  // confidence > 1
  expect_parse_error("2 -1\n", 1);
}

TEST(DetectionFile, LoadAndSave) {
  testing::TempDir dir("dets");
  DetectionTable t(3);
  t.at(2).push_back({{1, 2, 3, 4}, 0.5});
  save_detection_file(dir.path() / "d.txt", t);
  EXPECT_EQ(load_detection_file(dir.path() / "d.txt", 3), t);
  EXPECT_THROW(load_detection_file(dir.path() / "missing.txt", 3), std::runtime_error);
}

TEST(ScaleDetections, PerAxisLinear) {
  const std::vector<Detection> dets{{{100, 50, 40, 20}, 0.7}};
  const auto out = scale_detections(dets, 1280, 720, 512, 288);
  ASSERT_EQ(out.size(), 1U);
  EXPECT_DOUBLE_EQ(out[0].box.x, 40.0);
  EXPECT_DOUBLE_EQ(out[0].box.y, 20.0);
  EXPECT_DOUBLE_EQ(out[0].box.w, 16.0);
  EXPECT_DOUBLE_EQ(out[0].box.h, 8.0);
  EXPECT_EQ(out[0].confidence, 0.7);
  EXPECT_THROW(scale_detections(dets, 0, 1, 1, 1), std::invalid_argument);
}

}  // namespace
}  // namespace pflow
