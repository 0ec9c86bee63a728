#pragma once

#include <cstdint>
#include <vector>

#include "pflow/bbox.hpp"
#include "pflow/image.hpp"

namespace pflow {

// Coarse-to-fine image pyramid; levels()[0] is full resolution.
class Pyramid {
 public:
  Pyramid() = default;
  explicit Pyramid(std::vector<GrayImage> levels) : levels_(std::move(levels)) {}

  const std::vector<GrayImage>& levels() const noexcept { return levels_; }
  const GrayImage& level(std::size_t i) const { return levels_.at(i); }
  std::size_t size() const noexcept { return levels_.size(); }
  const GrayImage& base() const { return levels_.at(0); }

 private:
  std::vector<GrayImage> levels_;
};

// Signed derivative raster. Values are Scharr responses (32x the central
// difference of a linear ramp).
struct Gradient {
  int width = 0;
  int height = 0;
  std::vector<std::int16_t> dx;
  std::vector<std::int16_t> dy;

  std::int16_t ix(int x, int y) const noexcept { return dx[static_cast<std::size_t>(y) * width + x]; }
  std::int16_t iy(int x, int y) const noexcept { return dy[static_cast<std::size_t>(y) * width + x]; }
};

inline constexpr float kScharrScale = 32.0F;

struct CornerParams {
  int max_corners = 30;
  double quality = 0.01;
  double min_distance = 3.0;
};

// Bilinear shrink with half-pixel-centred sampling; results rounded half away
// from zero. Throws std::invalid_argument on zero targets or upscaling.
GrayImage downscale(const GrayImage& img, int target_w, int target_h);
RgbImage downscale(const RgbImage& img, int target_w, int target_h);

// Each level is a 2x2 box-filtered decimation of the previous one.
Pyramid build_pyramid(const GrayImage& img, int levels);

// 3x3 Scharr derivatives with replicated-edge padding. Requires width, height >= 3.
Gradient gradients(const GrayImage& img);

// Minimum eigenvalue of the 3x3-summed structure tensor at every pixel, in
// units of (gray level / px)^2.
std::vector<float> min_eigen_map(const Gradient& grad);

// Shi-Tomasi corners strictly inside roi (clipped to the image), ranked by
// score then row-major position, with greedy min-distance suppression.
std::vector<Point2f> shi_tomasi_corners(const GrayImage& img, const BBox& roi, const CornerParams& params = {});

}  // namespace pflow

namespace pflow {

// True when shi_tomasi_corners would accept roi on img (non-empty interior).
bool corner_roi_usable(const GrayImage& img, const BBox& roi) noexcept;

}  // namespace pflow
