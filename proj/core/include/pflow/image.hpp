#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pflow {

struct Point2f {
  float x = 0.0F;
  float y = 0.0F;

  friend bool operator==(const Point2f&, const Point2f&) = default;
};

// 8-bit single-channel raster, row-major. Immutable by convention once handed
// to the tracker; the mutable accessors exist for producers (decoders, renderers).
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);
  GrayImage(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::uint8_t at(int x, int y) const noexcept { return data_[index(x, y)]; }
  std::uint8_t& at(int x, int y) noexcept { return data_[index(x, y)]; }

  // Replicated-edge access for any integer coordinate.
  std::uint8_t clamped(int x, int y) const noexcept {
    return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
  }

  std::span<const std::uint8_t> pixels() const noexcept { return data_; }
  std::span<std::uint8_t> pixels() noexcept { return data_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// 8-bit interleaved RGB raster, row-major.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }

  Rgb at(int x, int y) const noexcept { return data_[index(x, y)]; }
  Rgb& at(int x, int y) noexcept { return data_[index(x, y)]; }

  std::span<const Rgb> pixels() const noexcept { return data_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> data_;
};

// BT.601 luma, rounded to nearest.
std::uint8_t luminance(Rgb c) noexcept;
GrayImage to_gray(const RgbImage& img);
RgbImage to_rgb(const GrayImage& img);

}  // namespace pflow
