#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pflow/image.hpp"
#include "pflow/imgproc.hpp"

namespace pflow {

struct FlowParams {
  int window = 21;  // odd, >= 5
  int levels = 3;
  int max_iters = 30;
  double eps = 0.01;               // px, per-level stopping threshold on the update norm
  double min_eigen_floor = 1e-4;   // on the window-averaged tensor, intensities scaled to [0, 1]
  double residual_ceiling = 20.0;  // mean absolute window difference, gray levels
};

enum class PointStatus : std::uint8_t {
  kTracked,
  kOutOfBounds,  // window left the level-0 image
  kSingular,     // structure tensor below the eigenvalue floor
  kHighResidual,
};

struct FlowResult {
  std::vector<Point2f> points_next;
  std::vector<PointStatus> status;
  std::vector<float> residual;

  std::size_t size() const noexcept { return status.size(); }
  bool tracked(std::size_t i) const { return status.at(i) == PointStatus::kTracked; }
  std::size_t tracked_count() const noexcept;
};

struct Displacement {
  double dx = 0.0;
  double dy = 0.0;

  friend bool operator==(const Displacement&, const Displacement&) = default;
};

// Pyramidal Lucas-Kanade, coarse to fine, no gain term. Throws
// std::invalid_argument when the pyramids differ in shape or params are invalid.
// Per-point results do not depend on the other points in the list.
FlowResult lk_track(const Pyramid& prev, const Pyramid& next, std::span<const Point2f> points,
                    const FlowParams& params = {});

// Component-wise median of (next - prev) over tracked points; empty when fewer
// than min_points survive.
std::optional<Displacement> median_displacement(std::span<const Point2f> points_prev, const FlowResult& result,
                                                std::size_t min_points = 3);

}  // namespace pflow
