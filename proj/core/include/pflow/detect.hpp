#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pflow/bbox.hpp"
#include "pflow/image.hpp"

namespace pflow {

using FrameIndex = int;

struct Detection {
  BBox box;
  double confidence = 1.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// Intersection over union in [0, 1]; 0 for disjoint boxes.
double iou(const BBox& a, const BBox& b) noexcept;

// Keeps detections with confidence strictly above threshold, order preserved.
std::vector<Detection> confidence_gate(std::span<const Detection> dets, double threshold);

// Per-frame detections for frames [0, frame_count).
class DetectionTable {
 public:
  DetectionTable() = default;
  explicit DetectionTable(FrameIndex frame_count);

  FrameIndex frame_count() const noexcept { return static_cast<FrameIndex>(frames_.size()); }
  const std::vector<Detection>& at(FrameIndex frame) const { return frames_.at(static_cast<std::size_t>(frame)); }
  std::vector<Detection>& at(FrameIndex frame) { return frames_.at(static_cast<std::size_t>(frame)); }
  std::size_t total() const noexcept;

  friend bool operator==(const DetectionTable&, const DetectionTable&) = default;

 private:
  std::vector<std::vector<Detection>> frames_;
};

// Text format, one line per frame with detections:
//   frame_index n_boxes x y w h conf [x y w h conf ...]
// Blank lines and lines starting with '#' are ignored. Throws ParseError.
DetectionTable parse_detections(std::istream& in, FrameIndex frame_count, const std::string& source_name = "<stream>");
DetectionTable load_detection_file(const std::filesystem::path& path, FrameIndex frame_count);
void write_detections(std::ostream& out, const DetectionTable& table);
void save_detection_file(const std::filesystem::path& path, const DetectionTable& table);

// Per-axis linear rescale between two rasters.
std::vector<Detection> scale_detections(std::span<const Detection> dets, int from_w, int from_h, int to_w, int to_h);

// One frame handed to a detection provider.
struct FrameView {
  FrameIndex index = 0;
  const GrayImage* gray = nullptr;
};

using DetectionBatchResult = std::map<FrameIndex, std::vector<Detection>>;

// Stand-in for the detector network. Called from the detector thread only;
// the result must contain an entry for every requested frame.
class DetectionProvider {
 public:
  virtual ~DetectionProvider() = default;
  virtual DetectionBatchResult detect(std::span<const FrameView> frames) = 0;
};

}  // namespace pflow
