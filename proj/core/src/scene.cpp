#include "pflow/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace pflow {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Lattice value in [-1, 1].
double lattice(std::uint64_t seed, long long ix, long long iy) {
  const std::uint64_t h =
      splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(ix) * 0x632BE59BD9B4E019ULL + static_cast<std::uint64_t>(iy)));
  return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, double x, double y, double cell) {
  const double gx = x / cell;
  const double gy = y / cell;
  const auto ix = static_cast<long long>(std::floor(gx));
  const auto iy = static_cast<long long>(std::floor(gy));
  const double fx = smooth(gx - static_cast<double>(ix));
  const double fy = smooth(gy - static_cast<double>(iy));
  const double v00 = lattice(seed, ix, iy);
  const double v10 = lattice(seed, ix + 1, iy);
  const double v01 = lattice(seed, ix, iy + 1);
  const double v11 = lattice(seed, ix + 1, iy + 1);
  const double top = v00 + (v10 - v00) * fx;
  const double bottom = v01 + (v11 - v01) * fx;
  return top + (bottom - top) * fy;
}

std::uint8_t to_gray(double v) { return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0)); }

double background_value(std::uint64_t seed, double x, double y) {
  return 120.0 + 55.0 * value_noise(seed, x, y, 24.0) + 35.0 * value_noise(seed + 1, x, y, 9.0) +
         18.0 * value_noise(seed + 2, x, y, 4.0);
}

double agent_value(const SceneAgent& a, double u, double v) {
  const double base = (a.id % 2 == 0) ? 70.0 : 180.0;
  return base + 50.0 * value_noise(a.texture_seed, u, v, 7.0) + 30.0 * value_noise(a.texture_seed + 1, u, v, 3.0);
}

double occluder_value(std::size_t k, double x, double y) {
  return 40.0 + 25.0 * value_noise(0xC0FFEEULL + k, x, y, 5.0);
}

bool center_inside(const BBox& b, int px, int py) {
  const double x = px + 0.5;
  const double y = py + 0.5;
  return x >= b.x && x < b.right() && y >= b.y && y < b.bottom();
}

}  // namespace

void validate_scene(const SyntheticScene& scene) {
  if (scene.width < 8 || scene.height < 8) {
    throw std::invalid_argument("scene: resolution must be at least 8x8");
  }
  if (!(scene.fps > 0.0)) {
    throw std::invalid_argument("scene: fps must be positive");
  }
  if (scene.frame_count < 0) {
    throw std::invalid_argument("scene: negative frame count");
  }
  std::set<int> ids;
  for (const SceneAgent& a : scene.agents) {
    const std::string who = "scene: agent " + std::to_string(a.id);
    if (a.id <= 0 || !ids.insert(a.id).second) {
      throw std::invalid_argument(who + ": ids must be positive and unique");
    }
    if (!(a.width > 0.0) || !(a.height > 0.0)) {
      throw std::invalid_argument(who + ": box size must be positive");
    }
    if (a.path.empty()) {
      throw std::invalid_argument(who + ": path has no waypoints");
    }
    for (std::size_t i = 0; i < a.path.size(); ++i) {
      const Waypoint& w = a.path[i];
      if (w.frame < 0 || w.frame >= std::max<FrameIndex>(scene.frame_count, 1)) {
        throw std::invalid_argument(who + ": waypoint frame " + std::to_string(w.frame) + " outside the scene");
      }
      if (i > 0 && w.frame <= a.path[i - 1].frame) {
        throw std::invalid_argument(who + ": waypoint frames must be strictly increasing");
      }
      // Paths are piecewise linear, so bounding the waypoints bounds the path.
      const BBox b = BBox::from_center(w.cx, w.cy, a.width, a.height);
      if (b.x < 0.0 || b.y < 0.0 || b.right() > scene.width || b.bottom() > scene.height) {
        throw std::invalid_argument(who + ": leaves the frame at frame " + std::to_string(w.frame));
      }
    }
  }
}

std::optional<BBox> agent_box(const SceneAgent& agent, FrameIndex frame) {
  if (agent.path.empty() || frame < agent.path.front().frame || frame > agent.path.back().frame) {
    return std::nullopt;
  }
  auto it = std::upper_bound(agent.path.begin(), agent.path.end(), frame,
                             [](FrameIndex f, const Waypoint& w) { return f < w.frame; });
  const Waypoint& a = *std::prev(it);
  if (it == agent.path.end() || a.frame == frame) {
    return BBox::from_center(a.cx, a.cy, agent.width, agent.height);
  }
  const Waypoint& b = *it;
  const double t = static_cast<double>(frame - a.frame) / static_cast<double>(b.frame - a.frame);
  return BBox::from_center(a.cx + (b.cx - a.cx) * t, a.cy + (b.cy - a.cy) * t, agent.width, agent.height);
}

GroundTruthFrame ground_truth_frame(const SyntheticScene& scene, FrameIndex frame) {
  GroundTruthFrame out;
  for (const SceneAgent& a : scene.agents) {
    const auto box = agent_box(a, frame);
    if (!box) {
      continue;
    }
    // Visible fraction counted on the pixel grid used by render_frame.
    const int x0 = std::max(0, static_cast<int>(std::floor(box->x)));
    const int y0 = std::max(0, static_cast<int>(std::floor(box->y)));
    const int x1 = std::min(scene.width - 1, static_cast<int>(std::ceil(box->right())));
    const int y1 = std::min(scene.height - 1, static_cast<int>(std::ceil(box->bottom())));
    long total = 0;
    long hidden = 0;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (!center_inside(*box, x, y)) {
          continue;
        }
        ++total;
        if (std::any_of(scene.occluders.begin(), scene.occluders.end(),
                        [&](const BBox& o) { return center_inside(o, x, y); })) {
          ++hidden;
        }
      }
    }
    const double visible = total > 0 ? static_cast<double>(total - hidden) / static_cast<double>(total) : 0.0;
    out.push_back({a.id, *box, visible});
  }
  return out;
}

std::vector<GroundTruthFrame> ground_truth(const SyntheticScene& scene) {
  std::vector<GroundTruthFrame> out;
  out.reserve(static_cast<std::size_t>(scene.frame_count));
  for (FrameIndex f = 0; f < scene.frame_count; ++f) {
    out.push_back(ground_truth_frame(scene, f));
  }
  return out;
}

DetectionTable ground_truth_table(const SyntheticScene& scene) {
  DetectionTable table(scene.frame_count);
  for (FrameIndex f = 0; f < scene.frame_count; ++f) {
    for (const GroundTruthBox& g : ground_truth_frame(scene, f)) {
      table.at(f).push_back({g.box, 1.0});
    }
  }
  return table;
}

GrayImage render_frame(const SyntheticScene& scene, FrameIndex frame) {
  GrayImage img(scene.width, scene.height);
  for (int y = 0; y < scene.height; ++y) {
    for (int x = 0; x < scene.width; ++x) {
      img.at(x, y) = to_gray(background_value(scene.background_seed, x + 0.5, y + 0.5));
    }
  }
  std::vector<const SceneAgent*> order;
  for (const SceneAgent& a : scene.agents) {
    order.push_back(&a);
  }
  std::sort(order.begin(), order.end(), [](const SceneAgent* a, const SceneAgent* b) { return a->id < b->id; });
  for (const SceneAgent* a : order) {
    const auto box = agent_box(*a, frame);
    if (!box) {
      continue;
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(box->x)));
    const int y0 = std::max(0, static_cast<int>(std::floor(box->y)));
    const int x1 = std::min(scene.width - 1, static_cast<int>(std::ceil(box->right())));
    const int y1 = std::min(scene.height - 1, static_cast<int>(std::ceil(box->bottom())));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (center_inside(*box, x, y)) {
          // Texture is attached to the agent, so it moves with the box.
          img.at(x, y) = to_gray(agent_value(*a, x + 0.5 - box->x, y + 0.5 - box->y));
        }
      }
    }
  }
  for (std::size_t k = 0; k < scene.occluders.size(); ++k) {
    const BBox& o = scene.occluders[k];
    for (int y = 0; y < scene.height; ++y) {
      for (int x = 0; x < scene.width; ++x) {
        if (center_inside(o, x, y)) {
          img.at(x, y) = to_gray(occluder_value(k, x + 0.5, y + 0.5));
        }
      }
    }
  }
  return img;
}

SyntheticScene demo_scene(FrameIndex frame_count, std::uint64_t seed) {
  SyntheticScene s;
  s.frame_count = frame_count;
  s.background_seed = seed;
  const FrameIndex last = std::max<FrameIndex>(frame_count - 1, 1);
  SceneAgent walker_right{1, {{0, 60.0, 50.0}, {last, 400.0, 54.0}}, 36.0, 80.0, seed * 31 + 1};
  SceneAgent walker_left{2, {{0, 452.0, 238.0}, {last, 110.0, 234.0}}, 36.0, 80.0, seed * 31 + 2};
  // The loiterer drifts around one spot and dominates the heat map.
  std::vector<Waypoint> loiter;
  const double spots[][2] = {{256.0, 145.0}, {266.0, 141.0}, {260.0, 149.0}, {250.0, 143.0}};
  const FrameIndex step = std::max<FrameIndex>(last / 6, 1);
  for (FrameIndex f = 0, k = 0; f < last; f += step, ++k) {
    loiter.push_back({f, spots[k % 4][0], spots[k % 4][1]});
  }
  loiter.push_back({last, spots[0][0], spots[0][1]});
  SceneAgent loiterer{3, std::move(loiter), 40.0, 84.0, seed * 31 + 3};
  s.agents = {walker_right, walker_left, loiterer};
  return s;
}

}  // namespace pflow
