#pragma once

#include <cmath>

namespace pflow {

// Axis-aligned box in pixel coordinates; (x, y) is the top-left corner.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double right() const noexcept { return x + w; }
  double bottom() const noexcept { return y + h; }
  double cx() const noexcept { return x + 0.5 * w; }
  double cy() const noexcept { return y + 0.5 * h; }
  double area() const noexcept { return w * h; }

  bool valid() const noexcept {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) && w > 0.0 && h > 0.0;
  }

  BBox translated(double dx, double dy) const noexcept { return {x + dx, y + dy, w, h}; }

  static BBox from_center(double cx, double cy, double w, double h) noexcept {
    return {cx - 0.5 * w, cy - 0.5 * h, w, h};
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

// Intersection of two boxes; w or h is <= 0 when they do not overlap.
inline BBox intersection(const BBox& a, const BBox& b) noexcept {
  const double x0 = std::fmax(a.x, b.x);
  const double y0 = std::fmax(a.y, b.y);
  const double x1 = std::fmin(a.right(), b.right());
  const double y1 = std::fmin(a.bottom(), b.bottom());
  return {x0, y0, x1 - x0, y1 - y0};
}

}  // namespace pflow
