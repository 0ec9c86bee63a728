#include "pflow/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

#include "pflow/text.hpp"

namespace pflow {

HeatMap::HeatMap(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("HeatMap: dimensions must be >= 1");
  }
  acc_.assign(static_cast<std::size_t>(width) * height, 0.0);
}

namespace {

double axis_weight(HeatKernel kernel, double offset, double extent) {
  switch (kernel) {
    case HeatKernel::kTent:
      return std::max(0.0, 1.0 - std::fabs(2.0 * offset / extent));
    case HeatKernel::kGaussian: {
      const double sigma = extent / 4.0;
      return std::exp(-0.5 * (offset * offset) / (sigma * sigma));
    }
    case HeatKernel::kUniform:
      return 1.0;
  }
  return 0.0;
}

}  // namespace

void HeatMap::accumulate(const BBox& box, HeatKernel kernel) {
  if (!box.valid()) {
    return;
  }
  // Pixel (px, py) has its centre at (px + 0.5, py + 0.5).
  const int x0 = std::max(0, static_cast<int>(std::ceil(box.x - 0.5)));
  const int x1 = std::min(width_ - 1, static_cast<int>(std::ceil(box.right() - 0.5)) - 1);
  const int y0 = std::max(0, static_cast<int>(std::ceil(box.y - 0.5)));
  const int y1 = std::min(height_ - 1, static_cast<int>(std::ceil(box.bottom() - 0.5)) - 1);
  if (x1 < x0 || y1 < y0) {
    return;
  }
  std::vector<double> wx(static_cast<std::size_t>(x1 - x0 + 1));
  for (int x = x0; x <= x1; ++x) {
    wx[static_cast<std::size_t>(x - x0)] = axis_weight(kernel, x + 0.5 - box.cx(), box.w);
  }
  for (int y = y0; y <= y1; ++y) {
    const double wy = axis_weight(kernel, y + 0.5 - box.cy(), box.h);
    if (wy <= 0.0) {
      continue;
    }
    double* row = &acc_[static_cast<std::size_t>(y) * width_];
    for (int x = x0; x <= x1; ++x) {
      row[x] += wx[static_cast<std::size_t>(x - x0)] * wy;
    }
  }
}

void HeatMap::record_frame(FrameIndex frame) noexcept {
  if (first_frame_ < 0 || frame < first_frame_) {
    first_frame_ = frame;
  }
  last_frame_ = std::max(last_frame_, frame);
}

double HeatMap::max_value() const noexcept { return *std::max_element(acc_.begin(), acc_.end()); }

std::pair<int, int> HeatMap::argmax() const noexcept {
  const auto it = std::max_element(acc_.begin(), acc_.end());
  const auto i = static_cast<int>(it - acc_.begin());
  return {i % width_, i / width_};
}

double HeatMap::total() const noexcept {
  double s = 0.0;
  for (double v : acc_) {
    s += v;
  }
  return s;
}

std::vector<double> normalize(const HeatMap& map) {
  std::vector<double> out(map.values().begin(), map.values().end());
  const double max = map.max_value();
  if (max > 0.0) {
    for (double& v : out) {
      v /= max;
    }
  }
  return out;
}

Rgb colormap(double v) noexcept {
  static constexpr double kStops[5][3] = {
      {0, 0, 255}, {0, 255, 255}, {0, 255, 0}, {255, 255, 0}, {255, 0, 0}};
  v = std::clamp(v, 0.0, 1.0);
  const double s = v * 4.0;
  const int i = std::min(3, static_cast<int>(s));
  const double t = s - i;
  auto channel = [&](int c) {
    return static_cast<std::uint8_t>(std::round(kStops[i][c] + (kStops[i + 1][c] - kStops[i][c]) * t));
  };
  return {channel(0), channel(1), channel(2)};
}

RgbImage render_overlay(std::span<const double> normalized, int width, int height, const RgbImage& background) {
  if (background.width() != width || background.height() != height ||
      normalized.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("render_overlay: heat map " + std::to_string(width) + "x" + std::to_string(height) +
                                " does not match background " + std::to_string(background.width()) + "x" +
                                std::to_string(background.height()));
  }
  RgbImage out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double v = std::clamp(normalized[static_cast<std::size_t>(y) * width + x], 0.0, 1.0);
      const double a = kOverlayAlpha * v;
      const Rgb bg = background.at(x, y);
      const Rgb fg = colormap(v);
      auto mix = [a](std::uint8_t b, std::uint8_t f) {
        return static_cast<std::uint8_t>(std::clamp(std::round((1.0 - a) * b + a * f), 0.0, 255.0));
      };
      out.at(x, y) = {mix(bg.r, fg.r), mix(bg.g, fg.g), mix(bg.b, fg.b)};
    }
  }
  return out;
}

void write_heatmap_matrix(std::ostream& out, const HeatMap& map) {
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      if (x > 0) {
        out << ' ';
      }
      out << text::format_double(map.at(x, y));
    }
    out << '\n';
  }
}

VisitStats collect_stats(std::span<const TrackEvent> events, double fps) {
  if (!(fps > 0.0)) {
    throw std::invalid_argument("collect_stats: fps must be positive");
  }
  struct Acc {
    TrackVisit visit;
    double last_cx = 0.0;
    double last_cy = 0.0;
    bool observed = false;
  };
  std::map<int, Acc> by_id;
  for (const TrackEvent& e : events) {
    Acc& a = by_id[e.track_id];
    a.visit.id = e.track_id;
    if (e.kind != EventKind::kSpawn && e.kind != EventKind::kMatch && e.kind != EventKind::kRecover) {
      continue;
    }
    const double cx = e.box.cx();
    const double cy = e.box.cy();
    if (!a.observed) {
      a.visit.first_seen = e.frame;
      a.observed = true;
    } else {
      a.visit.path_length_px += std::hypot(cx - a.last_cx, cy - a.last_cy);
    }
    a.visit.last_seen = e.frame;
    a.last_cx = cx;
    a.last_cy = cy;
  }
  VisitStats stats;
  double dwell_sum = 0.0;
  for (auto& [id, a] : by_id) {
    if (!a.observed) {
      continue;
    }
    a.visit.dwell_s = static_cast<double>(a.visit.last_seen - a.visit.first_seen) / fps;
    dwell_sum += a.visit.dwell_s;
    stats.tracks.push_back(a.visit);
  }
  stats.visitor_count = stats.tracks.size();
  stats.mean_dwell_s = stats.tracks.empty() ? 0.0 : dwell_sum / static_cast<double>(stats.tracks.size());
  return stats;
}

VisitStats collect_stats(std::istream& event_log, double fps, const std::string& source_name) {
  return collect_stats(parse_event_log(event_log, source_name), fps);
}

void write_stats_table(std::ostream& out, const VisitStats& stats) {
  out << "    id  first_seen   last_seen   dwell_s   path_px\n";
  for (const TrackVisit& v : stats.tracks) {
    char line[128];
    std::snprintf(line, sizeof(line), "%6d %11d %11d %9s %9s\n", v.id, v.first_seen, v.last_seen,
                  text::format_fixed(v.dwell_s, 2).c_str(), text::format_fixed(v.path_length_px, 1).c_str());
    out << line;
  }
  out << "visitors: " << stats.visitor_count << ", mean dwell: " << text::format_fixed(stats.mean_dwell_s, 2)
      << " s\n";
}

void write_stats_kv(std::ostream& out, const VisitStats& stats) {
  out << "visitor_count=" << stats.visitor_count << '\n'
      << "mean_dwell_s=" << text::format_fixed(stats.mean_dwell_s, 6) << '\n';
  for (const TrackVisit& v : stats.tracks) {
    out << "track." << v.id << ".first_seen=" << v.first_seen << '\n'
        << "track." << v.id << ".last_seen=" << v.last_seen << '\n'
        << "track." << v.id << ".dwell_s=" << text::format_fixed(v.dwell_s, 6) << '\n'
        << "track." << v.id << ".path_length_px=" << text::format_fixed(v.path_length_px, 6) << '\n';
  }
}

}  // namespace pflow
