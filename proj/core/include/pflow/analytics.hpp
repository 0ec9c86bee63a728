#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pflow/bbox.hpp"
#include "pflow/detect.hpp"
#include "pflow/image.hpp"
#include "pflow/track.hpp"

namespace pflow {

enum class HeatKernel : std::uint8_t {
  kTent,      // separable (1 - |2dx/w|)(1 - |2dy/h|)
  kGaussian,  // separable, sigma = extent / 4 on each axis
  kUniform,   // plain occupancy count, for comparison only
};

// Per-pixel occupancy accumulator at the processing raster.
class HeatMap {
 public:
  HeatMap(int width, int height);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  double at(int x, int y) const noexcept { return acc_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const double> values() const noexcept { return acc_; }

  // Weighted increment of every pixel whose centre lies inside box. Boxes that
  // miss the map are a no-op.
  void accumulate(const BBox& box, HeatKernel kernel = HeatKernel::kTent);
  void record_frame(FrameIndex frame) noexcept;

  double max_value() const noexcept;
  std::pair<int, int> argmax() const noexcept;  // first maximum in row-major order
  double total() const noexcept;
  FrameIndex first_frame() const noexcept { return first_frame_; }
  FrameIndex last_frame() const noexcept { return last_frame_; }

 private:
  int width_;
  int height_;
  std::vector<double> acc_;
  FrameIndex first_frame_ = -1;
  FrameIndex last_frame_ = -1;
};

// Values divided by the global maximum; an all-zero map stays all zero.
std::vector<double> normalize(const HeatMap& map);

// Five-stop ramp blue -> cyan -> green -> yellow -> red over [0, 1].
Rgb colormap(double v) noexcept;

inline constexpr double kOverlayAlpha = 0.6;

// out = (1 - a v) bg + a v colormap(v), rounded half away from zero. Throws
// std::invalid_argument when dimensions differ.
RgbImage render_overlay(std::span<const double> normalized, int width, int height, const RgbImage& background);

// One row per map line, values in shortest round-trip form.
void write_heatmap_matrix(std::ostream& out, const HeatMap& map);

struct TrackVisit {
  int id = 0;
  FrameIndex first_seen = 0;
  FrameIndex last_seen = 0;
  double dwell_s = 0.0;
  double path_length_px = 0.0;
};

struct VisitStats {
  std::vector<TrackVisit> tracks;  // sorted by id
  std::size_t visitor_count = 0;
  double mean_dwell_s = 0.0;
};

// Observations are spawn, match and recover events; dwell spans the first to
// the last observation, path length sums centre steps between them.
VisitStats collect_stats(std::span<const TrackEvent> events, double fps);
VisitStats collect_stats(std::istream& event_log, double fps, const std::string& source_name = "<events>");

void write_stats_table(std::ostream& out, const VisitStats& stats);
void write_stats_kv(std::ostream& out, const VisitStats& stats);

}  // namespace pflow
