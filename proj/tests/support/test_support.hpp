#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "pflow/image.hpp"

namespace pflow::testing {

// Smooth random texture: bilinearly interpolated lattice noise with the given
// cell size, sampled at (x + ox, y + oy). Shifting the offset moves content.
inline double lattice_texture(std::uint64_t seed, double x, double y, double cell) {
  auto node = [&](long long i, long long j) {
    std::uint64_t h = seed ^ (static_cast<std::uint64_t>(i) * 0x9E3779B97F4A7C15ULL) ^
                      (static_cast<std::uint64_t>(j) * 0xC2B2AE3D27D4EB4FULL);
    h ^= h >> 31;
    h *= 0xBF58476D1CE4E5B9ULL;
    h ^= h >> 27;
    return static_cast<double>(h % 1000) / 999.0;
  };
  const double gx = x / cell;
  const double gy = y / cell;
  const auto i = static_cast<long long>(std::floor(gx));
  const auto j = static_cast<long long>(std::floor(gy));
  double fx = gx - static_cast<double>(i);
  double fy = gy - static_cast<double>(j);
  fx = fx * fx * (3.0 - 2.0 * fx);
  fy = fy * fy * (3.0 - 2.0 * fy);
  const double top = node(i, j) + (node(i + 1, j) - node(i, j)) * fx;
  const double bottom = node(i, j + 1) + (node(i + 1, j + 1) - node(i, j + 1)) * fx;
  return top + (bottom - top) * fy;
}

inline GrayImage textured_image(int w, int h, std::uint64_t seed, double ox = 0.0, double oy = 0.0, double cell = 6.0) {
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = 30.0 + 200.0 * lattice_texture(seed, x + ox, y + oy, cell);
      img.at(x, y) = static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return img;
}

// Fresh, empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("pflow_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace pflow::testing
