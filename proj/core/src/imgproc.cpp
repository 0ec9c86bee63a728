#include "pflow/imgproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pflow {

namespace {

// Source sample position and blend weight for one output coordinate.
struct Tap {
  int i0;
  int i1;
  double frac;
};

std::vector<Tap> bilinear_taps(int src, int dst) {
  std::vector<Tap> taps(static_cast<std::size_t>(dst));
  const double ratio = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    const double s = std::clamp((i + 0.5) * ratio - 0.5, 0.0, static_cast<double>(src - 1));
    const int i0 = static_cast<int>(std::floor(s));
    taps[static_cast<std::size_t>(i)] = {i0, std::min(i0 + 1, src - 1), s - i0};
  }
  return taps;
}

void check_downscale(int src_w, int src_h, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) {
    throw std::invalid_argument("downscale: target dimensions must be >= 1");
  }
  if (target_w > src_w || target_h > src_h) {
    throw std::invalid_argument("downscale: cannot upscale " + std::to_string(src_w) + "x" + std::to_string(src_h) +
                                " to " + std::to_string(target_w) + "x" + std::to_string(target_h));
  }
}

std::uint8_t blend(double v00, double v10, double v01, double v11, const Tap& tx, const Tap& ty) {
  const double top = v00 + (v10 - v00) * tx.frac;
  const double bottom = v01 + (v11 - v01) * tx.frac;
  const double v = top + (bottom - top) * ty.frac;
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

}  // namespace

GrayImage downscale(const GrayImage& img, int target_w, int target_h) {
  check_downscale(img.width(), img.height(), target_w, target_h);
  if (target_w == img.width() && target_h == img.height()) {
    return img;
  }
  const auto xs = bilinear_taps(img.width(), target_w);
  const auto ys = bilinear_taps(img.height(), target_h);
  GrayImage out(target_w, target_h);
  for (int y = 0; y < target_h; ++y) {
    const Tap& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < target_w; ++x) {
      const Tap& tx = xs[static_cast<std::size_t>(x)];
      out.at(x, y) = blend(img.at(tx.i0, ty.i0), img.at(tx.i1, ty.i0), img.at(tx.i0, ty.i1), img.at(tx.i1, ty.i1), tx, ty);
    }
  }
  return out;
}

RgbImage downscale(const RgbImage& img, int target_w, int target_h) {
  check_downscale(img.width(), img.height(), target_w, target_h);
  if (target_w == img.width() && target_h == img.height()) {
    return img;
  }
  const auto xs = bilinear_taps(img.width(), target_w);
  const auto ys = bilinear_taps(img.height(), target_h);
  RgbImage out(target_w, target_h);
  for (int y = 0; y < target_h; ++y) {
    const Tap& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < target_w; ++x) {
      const Tap& tx = xs[static_cast<std::size_t>(x)];
      const Rgb a = img.at(tx.i0, ty.i0);
      const Rgb b = img.at(tx.i1, ty.i0);
      const Rgb c = img.at(tx.i0, ty.i1);
      const Rgb d = img.at(tx.i1, ty.i1);
      out.at(x, y) = {blend(a.r, b.r, c.r, d.r, tx, ty), blend(a.g, b.g, c.g, d.g, tx, ty),
                      blend(a.b, b.b, c.b, d.b, tx, ty)};
    }
  }
  return out;
}

Pyramid build_pyramid(const GrayImage& img, int levels) {
  if (levels < 1) {
    throw std::invalid_argument("build_pyramid: levels must be >= 1");
  }
  if (levels > 31 || (1 << (levels - 1)) > std::min(img.width(), img.height())) {
    throw std::invalid_argument("build_pyramid: " + std::to_string(levels) + " levels would shrink " +
                                std::to_string(img.width()) + "x" + std::to_string(img.height()) + " below 1 pixel");
  }
  std::vector<GrayImage> out;
  out.reserve(static_cast<std::size_t>(levels));
  out.push_back(img);
  for (int l = 1; l < levels; ++l) {
    const GrayImage& prev = out.back();
    const int w = std::max(1, prev.width() / 2);
    const int h = std::max(1, prev.height() / 2);
    GrayImage next(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int sum = prev.clamped(2 * x, 2 * y) + prev.clamped(2 * x + 1, 2 * y) + prev.clamped(2 * x, 2 * y + 1) +
                        prev.clamped(2 * x + 1, 2 * y + 1);
        next.at(x, y) = static_cast<std::uint8_t>((sum + 2) / 4);
      }
    }
    out.push_back(std::move(next));
  }
  return Pyramid(std::move(out));
}

Gradient gradients(const GrayImage& img) {
  if (img.width() < 3 || img.height() < 3) {
    throw std::invalid_argument("gradients: image must be at least 3x3");
  }
  Gradient g;
  g.width = img.width();
  g.height = img.height();
  const auto n = img.size();
  g.dx.resize(n);
  g.dy.resize(n);
  const int w = img.width();
  const auto px = img.pixels();
  for (int y = 0; y < img.height(); ++y) {
    const std::uint8_t* up = px.data() + static_cast<std::size_t>(std::max(y - 1, 0)) * w;
    const std::uint8_t* mid = px.data() + static_cast<std::size_t>(y) * w;
    const std::uint8_t* down = px.data() + static_cast<std::size_t>(std::min(y + 1, img.height() - 1)) * w;
    for (int x = 0; x < w; ++x) {
      const int l = std::max(x - 1, 0);
      const int r = std::min(x + 1, w - 1);
      const int tl = up[l];
      const int tc = up[x];
      const int tr = up[r];
      const int ml = mid[l];
      const int mr = mid[r];
      const int bl = down[l];
      const int bc = down[x];
      const int br = down[r];
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      g.dx[i] = static_cast<std::int16_t>(3 * (tr - tl) + 10 * (mr - ml) + 3 * (br - bl));
      g.dy[i] = static_cast<std::int16_t>(3 * (bl - tl) + 10 * (bc - tc) + 3 * (br - tr));
    }
  }
  return g;
}

namespace {

double min_eigen(double a, double b, double c) {
  const double half_diff = 0.5 * (a - c);
  return 0.5 * (a + c) - std::sqrt(half_diff * half_diff + b * b);
}

// Structure-tensor score at (x, y) from a gradient accessor; 3x3 window with
// indices clamped to [lo, hi] on each axis.
template <typename GradAt>
double corner_score(GradAt&& grad_at, int x, int y, int x_lo, int x_hi, int y_lo, int y_hi) {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  for (int dy = -1; dy <= 1; ++dy) {
    const int yy = std::clamp(y + dy, y_lo, y_hi);
    for (int dx = -1; dx <= 1; ++dx) {
      const int xx = std::clamp(x + dx, x_lo, x_hi);
      const auto [gx, gy] = grad_at(xx, yy);
      a += gx * gx;
      b += gx * gy;
      c += gy * gy;
    }
  }
  return std::max(0.0, min_eigen(a, b, c));
}

}  // namespace

std::vector<float> min_eigen_map(const Gradient& grad) {
  std::vector<float> out(static_cast<std::size_t>(grad.width) * grad.height);
  auto grad_at = [&](int x, int y) {
    return std::pair{grad.ix(x, y) / static_cast<double>(kScharrScale), grad.iy(x, y) / static_cast<double>(kScharrScale)};
  };
  for (int y = 0; y < grad.height; ++y) {
    for (int x = 0; x < grad.width; ++x) {
      out[static_cast<std::size_t>(y) * grad.width + x] =
          static_cast<float>(corner_score(grad_at, x, y, 0, grad.width - 1, 0, grad.height - 1));
    }
  }
  return out;
}

std::vector<Point2f> shi_tomasi_corners(const GrayImage& img, const BBox& roi, const CornerParams& params) {
  if (params.max_corners < 1) {
    throw std::invalid_argument("shi_tomasi_corners: max_corners must be >= 1");
  }
  if (!(params.quality > 0.0 && params.quality < 1.0)) {
    throw std::invalid_argument("shi_tomasi_corners: quality must lie in (0, 1)");
  }
  if (!(params.min_distance >= 0.0)) {
    throw std::invalid_argument("shi_tomasi_corners: min_distance must be >= 0");
  }
  if (img.width() < 3 || img.height() < 3) {
    throw std::invalid_argument("shi_tomasi_corners: image must be at least 3x3");
  }
  // Candidate pixels lie strictly inside roi and strictly inside [0, size-1].
  const double lo_x = std::max(roi.x, 0.0);
  const double hi_x = std::min(roi.right(), static_cast<double>(img.width() - 1));
  const double lo_y = std::max(roi.y, 0.0);
  const double hi_y = std::min(roi.bottom(), static_cast<double>(img.height() - 1));
  if (!roi.valid() || !(hi_x > lo_x) || !(hi_y > lo_y)) {
    throw std::invalid_argument("shi_tomasi_corners: roi does not intersect the image");
  }
  const int x0 = static_cast<int>(std::floor(lo_x)) + 1;
  const int x1 = static_cast<int>(std::ceil(hi_x)) - 1;
  const int y0 = static_cast<int>(std::floor(lo_y)) + 1;
  const int y1 = static_cast<int>(std::ceil(hi_y)) - 1;
  if (x1 < x0 || y1 < y0) {
    throw std::invalid_argument("shi_tomasi_corners: roi contains no interior pixel");
  }

  // Gradients over the candidate block plus a one-pixel apron.
  const int gx0 = x0 - 1;
  const int gy0 = y0 - 1;
  const int gw = x1 - x0 + 3;
  const int gh = y1 - y0 + 3;
  std::vector<std::pair<double, double>> grad(static_cast<std::size_t>(gw) * gh);
  for (int y = 0; y < gh; ++y) {
    for (int x = 0; x < gw; ++x) {
      const int ix = gx0 + x;
      const int iy = gy0 + y;
      const int tl = img.clamped(ix - 1, iy - 1);
      const int tc = img.clamped(ix, iy - 1);
      const int tr = img.clamped(ix + 1, iy - 1);
      const int ml = img.clamped(ix - 1, iy);
      const int mr = img.clamped(ix + 1, iy);
      const int bl = img.clamped(ix - 1, iy + 1);
      const int bc = img.clamped(ix, iy + 1);
      const int br = img.clamped(ix + 1, iy + 1);
      grad[static_cast<std::size_t>(y) * gw + x] = {
          (3 * (tr - tl) + 10 * (mr - ml) + 3 * (br - bl)) / static_cast<double>(kScharrScale),
          (3 * (bl - tl) + 10 * (bc - tc) + 3 * (br - tr)) / static_cast<double>(kScharrScale)};
    }
  }
  auto grad_at = [&](int x, int y) { return grad[static_cast<std::size_t>(y - gy0) * gw + (x - gx0)]; };

  struct Candidate {
    float score;
    int x;
    int y;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(static_cast<std::size_t>(x1 - x0 + 1) * (y1 - y0 + 1));
  float best = 0.0F;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const auto s = static_cast<float>(corner_score(grad_at, x, y, gx0, gx0 + gw - 1, gy0, gy0 + gh - 1));
      if (s > 0.0F) {
        candidates.push_back({s, x, y});
        best = std::max(best, s);
      }
    }
  }
  if (candidates.empty()) {
    return {};
  }
  const auto threshold = static_cast<float>(params.quality * best);
  std::erase_if(candidates, [&](const Candidate& c) { return c.score < threshold; });
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  const double min_d2 = params.min_distance * params.min_distance;
  std::vector<Point2f> out;
  for (const Candidate& c : candidates) {
    const bool clear = std::none_of(out.begin(), out.end(), [&](const Point2f& p) {
      const double dx = p.x - c.x;
      const double dy = p.y - c.y;
      return dx * dx + dy * dy < min_d2;
    });
    if (clear) {
      out.push_back({static_cast<float>(c.x), static_cast<float>(c.y)});
      if (static_cast<int>(out.size()) == params.max_corners) {
        break;
      }
    }
  }
  return out;
}

}  // namespace pflow

namespace pflow {

bool corner_roi_usable(const GrayImage& img, const BBox& roi) noexcept {
  if (img.width() < 3 || img.height() < 3 || !roi.valid()) {
    return false;
  }
  const double lo_x = std::max(roi.x, 0.0);
  const double hi_x = std::min(roi.right(), static_cast<double>(img.width() - 1));
  const double lo_y = std::max(roi.y, 0.0);
  const double hi_y = std::min(roi.bottom(), static_cast<double>(img.height() - 1));
  if (!(hi_x > lo_x) || !(hi_y > lo_y)) {
    return false;
  }
  return std::ceil(hi_x) - 1 >= std::floor(lo_x) + 1 && std::ceil(hi_y) - 1 >= std::floor(lo_y) + 1;
}

}  // namespace pflow
