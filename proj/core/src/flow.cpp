#include "pflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pflow {

namespace {

// Float copy of one pyramid level with optional Scharr derivatives, scaled so
// that a unit-slope ramp has derivative 1.
struct LevelData {
  int width = 0;
  int height = 0;
  std::vector<float> intensity;
  std::vector<float> ix;
  std::vector<float> iy;

  float sample(const std::vector<float>& plane, float x, float y) const noexcept {
    x = std::clamp(x, 0.0F, static_cast<float>(width - 1));
    y = std::clamp(y, 0.0F, static_cast<float>(height - 1));
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, width - 1);
    const int y1 = std::min(y0 + 1, height - 1);
    const float fx = x - static_cast<float>(x0);
    const float fy = y - static_cast<float>(y0);
    const auto at = [&](int xx, int yy) { return plane[static_cast<std::size_t>(yy) * width + xx]; };
    const float top = at(x0, y0) + (at(x1, y0) - at(x0, y0)) * fx;
    const float bottom = at(x0, y1) + (at(x1, y1) - at(x0, y1)) * fx;
    return top + (bottom - top) * fy;
  }

  // Samples a (2 half + 1)^2 window centred on (x, y) into out, row-major. The
  // bilinear weights are shared by every tap.
  void sample_window(const std::vector<float>& plane, float x, float y, int half, float* out) const noexcept {
    const float fx0 = std::floor(x);
    const float fy0 = std::floor(y);
    const int x0 = static_cast<int>(fx0);
    const int y0 = static_cast<int>(fy0);
    if (x0 - half < 0 || y0 - half < 0 || x0 + half + 1 > width - 1 || y0 + half + 1 > height - 1) {
      // Border case: per-axis taps with the coordinate clamped into the image,
      // equivalent to calling sample() for every tap.
      const int side = 2 * half + 1;
      thread_local std::vector<int> cols0;
      thread_local std::vector<int> cols1;
      thread_local std::vector<float> colf;
      cols0.resize(static_cast<std::size_t>(side));
      cols1.resize(cols0.size());
      colf.resize(cols0.size());
      for (int wx = 0; wx < side; ++wx) {
        const float sx = std::clamp(x + static_cast<float>(wx - half), 0.0F, static_cast<float>(width - 1));
        const int c0 = static_cast<int>(sx);
        cols0[wx] = c0;
        cols1[wx] = std::min(c0 + 1, width - 1);
        colf[wx] = sx - static_cast<float>(c0);
      }
      for (int wy = 0; wy < side; ++wy) {
        const float sy = std::clamp(y + static_cast<float>(wy - half), 0.0F, static_cast<float>(height - 1));
        const int r0 = static_cast<int>(sy);
        const int r1 = std::min(r0 + 1, height - 1);
        const float fy = sy - static_cast<float>(r0);
        const float* top = plane.data() + static_cast<std::size_t>(r0) * width;
        const float* bottom = plane.data() + static_cast<std::size_t>(r1) * width;
        float* o = out + static_cast<std::size_t>(wy) * side;
        for (int wx = 0; wx < side; ++wx) {
          const float t = top[cols0[wx]] + (top[cols1[wx]] - top[cols0[wx]]) * colf[wx];
          const float b = bottom[cols0[wx]] + (bottom[cols1[wx]] - bottom[cols0[wx]]) * colf[wx];
          o[wx] = t + (b - t) * fy;
        }
      }
      return;
    }
    const float fx = x - fx0;
    const float fy = y - fy0;
    const float w00 = (1.0F - fx) * (1.0F - fy);
    const float w10 = fx * (1.0F - fy);
    const float w01 = (1.0F - fx) * fy;
    const float w11 = fx * fy;
    const int side = 2 * half + 1;
    for (int wy = 0; wy < side; ++wy) {
      const float* row = plane.data() + static_cast<std::size_t>(y0 - half + wy) * width + (x0 - half);
      const float* below = row + width;
      float* o = out + static_cast<std::size_t>(wy) * side;
      for (int wx = 0; wx < side; ++wx) {
        o[wx] = w00 * row[wx] + w10 * row[wx + 1] + w01 * below[wx] + w11 * below[wx + 1];
      }
    }
  }
};

LevelData make_level(const GrayImage& img, bool with_gradients) {
  LevelData d;
  d.width = img.width();
  d.height = img.height();
  d.intensity.assign(img.pixels().begin(), img.pixels().end());
  if (with_gradients && img.width() >= 3 && img.height() >= 3) {
    const Gradient g = gradients(img);
    d.ix.resize(g.dx.size());
    d.iy.resize(g.dy.size());
    std::transform(g.dx.begin(), g.dx.end(), d.ix.begin(), [](std::int16_t v) { return v / kScharrScale; });
    std::transform(g.dy.begin(), g.dy.end(), d.iy.begin(), [](std::int16_t v) { return v / kScharrScale; });
  }
  return d;
}

bool window_inside(float x, float y, int half, int width, int height) {
  return x - half >= 0.0F && y - half >= 0.0F && x + half <= static_cast<float>(width - 1) &&
         y + half <= static_cast<float>(height - 1);
}

void check_inputs(const Pyramid& prev, const Pyramid& next, const FlowParams& p) {
  if (p.window < 5 || p.window % 2 == 0) {
    throw std::invalid_argument("lk_track: window must be odd and >= 5, got " + std::to_string(p.window));
  }
  if (p.max_iters < 1 || !(p.eps > 0.0)) {
    throw std::invalid_argument("lk_track: max_iters must be >= 1 and eps > 0");
  }
  if (prev.size() == 0 || prev.size() != next.size()) {
    throw std::invalid_argument("lk_track: pyramids must have the same, non-zero level count");
  }
  for (std::size_t l = 0; l < prev.size(); ++l) {
    if (prev.level(l).width() != next.level(l).width() || prev.level(l).height() != next.level(l).height()) {
      throw std::invalid_argument("lk_track: pyramid level " + std::to_string(l) + " shapes differ");
    }
  }
  if (prev.base().width() < 3 || prev.base().height() < 3) {
    throw std::invalid_argument("lk_track: level-0 image must be at least 3x3");
  }
}

}  // namespace

std::size_t FlowResult::tracked_count() const noexcept {
  return static_cast<std::size_t>(std::count(status.begin(), status.end(), PointStatus::kTracked));
}

FlowResult lk_track(const Pyramid& prev, const Pyramid& next, std::span<const Point2f> points,
                    const FlowParams& params) {
  check_inputs(prev, next, params);
  FlowResult result;
  result.points_next.assign(points.begin(), points.end());
  result.status.assign(points.size(), PointStatus::kTracked);
  result.residual.assign(points.size(), 0.0F);
  if (points.empty()) {
    return result;
  }

  // Levels too small for a 3x3 derivative kernel are skipped.
  std::size_t levels = std::min<std::size_t>(prev.size(), static_cast<std::size_t>(std::max(1, params.levels)));
  while (levels > 1 && (prev.level(levels - 1).width() < 3 || prev.level(levels - 1).height() < 3)) {
    --levels;
  }
  std::vector<LevelData> prev_levels;
  std::vector<LevelData> next_levels;
  for (std::size_t l = 0; l < levels; ++l) {
    prev_levels.push_back(make_level(prev.level(l), true));
    next_levels.push_back(make_level(next.level(l), false));
  }

  const int half = params.window / 2;
  const auto win_area = static_cast<double>(params.window) * params.window;
  // Normalised intensities ([0,1]) for the eigenvalue floor.
  constexpr double kNorm = 1.0 / (255.0 * 255.0);

  std::vector<float> patch(static_cast<std::size_t>(params.window) * params.window);
  std::vector<float> patch_ix(patch.size());
  std::vector<float> patch_iy(patch.size());
  std::vector<float> moved(patch.size());

  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point2f p0 = points[i];
    PointStatus status = PointStatus::kTracked;
    if (!std::isfinite(p0.x) || !std::isfinite(p0.y) || !window_inside(p0.x, p0.y, half, prev.base().width(), prev.base().height())) {
      result.status[i] = PointStatus::kOutOfBounds;
      continue;
    }

    double gx = 0.0;  // guess carried between levels, in current-level pixels
    double gy = 0.0;
    for (auto level = static_cast<int>(levels) - 1; level >= 0; --level) {
      const LevelData& I = prev_levels[static_cast<std::size_t>(level)];
      const LevelData& J = next_levels[static_cast<std::size_t>(level)];
      const float scale = 1.0F / static_cast<float>(1 << level);
      const float px = p0.x * scale;
      const float py = p0.y * scale;

      I.sample_window(I.intensity, px, py, half, patch.data());
      I.sample_window(I.ix, px, py, half, patch_ix.data());
      I.sample_window(I.iy, px, py, half, patch_iy.data());
      float s11 = 0.0F;
      float s12 = 0.0F;
      float s22 = 0.0F;
#pragma omp simd reduction(+ : s11, s12, s22)
      for (std::size_t k = 0; k < patch.size(); ++k) {
        s11 += patch_ix[k] * patch_ix[k];
        s12 += patch_ix[k] * patch_iy[k];
        s22 += patch_iy[k] * patch_iy[k];
      }
      const double a11 = s11;
      const double a12 = s12;
      const double a22 = s22;
      const double det = a11 * a22 - a12 * a12;
      const double half_diff = 0.5 * (a11 - a22);
      const double min_eig = (0.5 * (a11 + a22) - std::sqrt(half_diff * half_diff + a12 * a12)) * kNorm / win_area;
      if (min_eig < params.min_eigen_floor || det <= 0.0) {
        if (level == 0) {
          status = PointStatus::kSingular;
          break;
        }
        gx *= 2.0;
        gy *= 2.0;
        continue;
      }

      double vx = 0.0;
      double vy = 0.0;
      for (int iter = 0; iter < params.max_iters; ++iter) {
        const double qx = px + gx + vx;
        const double qy = py + gy + vy;
        J.sample_window(J.intensity, static_cast<float>(qx), static_cast<float>(qy), half, moved.data());
        float sx = 0.0F;
        float sy = 0.0F;
#pragma omp simd reduction(+ : sx, sy)
        for (std::size_t k = 0; k < patch.size(); ++k) {
          const float diff = patch[k] - moved[k];
          sx += diff * patch_ix[k];
          sy += diff * patch_iy[k];
        }
        const double bx = sx;
        const double by = sy;
        const double ex = (a22 * bx - a12 * by) / det;
        const double ey = (a11 * by - a12 * bx) / det;
        vx += ex;
        vy += ey;
        if (!std::isfinite(vx) || !std::isfinite(vy)) {
          break;
        }
        if (ex * ex + ey * ey < params.eps * params.eps) {
          break;
        }
      }
      gx += vx;
      gy += vy;
      if (level > 0) {
        gx *= 2.0;
        gy *= 2.0;
      }
    }

    const Point2f p1{static_cast<float>(p0.x + gx), static_cast<float>(p0.y + gy)};
    result.points_next[i] = p1;
    if (status == PointStatus::kTracked) {
      const LevelData& I = prev_levels[0];
      const LevelData& J = next_levels[0];
      if (!std::isfinite(p1.x) || !std::isfinite(p1.y) || !window_inside(p1.x, p1.y, half, J.width, J.height)) {
        status = PointStatus::kOutOfBounds;
      } else {
        I.sample_window(I.intensity, p0.x, p0.y, half, patch.data());
        J.sample_window(J.intensity, p1.x, p1.y, half, moved.data());
        double err = 0.0;
        for (std::size_t k = 0; k < patch.size(); ++k) {
          err += std::fabs(static_cast<double>(patch[k]) - moved[k]);
        }
        result.residual[i] = static_cast<float>(err / win_area);
        if (result.residual[i] > params.residual_ceiling) {
          status = PointStatus::kHighResidual;
        }
      }
    }
    result.status[i] = status;
  }
  return result;
}

namespace {

double median_of(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) {
    return upper;
  }
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

std::optional<Displacement> median_displacement(std::span<const Point2f> points_prev, const FlowResult& result,
                                                std::size_t min_points) {
  if (points_prev.size() != result.size() || result.points_next.size() != result.size()) {
    throw std::invalid_argument("median_displacement: point list lengths differ");
  }
  std::vector<double> dxs;
  std::vector<double> dys;
  for (std::size_t i = 0; i < points_prev.size(); ++i) {
    if (result.tracked(i)) {
      dxs.push_back(static_cast<double>(result.points_next[i].x) - points_prev[i].x);
      dys.push_back(static_cast<double>(result.points_next[i].y) - points_prev[i].y);
    }
  }
  if (dxs.empty() || dxs.size() < min_points) {
    return std::nullopt;
  }
  return Displacement{median_of(dxs), median_of(dys)};
}

}  // namespace pflow
