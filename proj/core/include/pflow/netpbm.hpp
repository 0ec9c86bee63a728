#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>

#include "pflow/image.hpp"

namespace pflow::netpbm {

// Binary P5/P6 with maxval 255. P6 input is converted to luminance by read_gray.
GrayImage read_gray(const std::filesystem::path& path);
RgbImage read_rgb(const std::filesystem::path& path);
std::variant<GrayImage, RgbImage> read_any(const std::filesystem::path& path);
std::variant<GrayImage, RgbImage> decode(std::istream& in, const std::string& source_name);

void write(const std::filesystem::path& path, const GrayImage& img);
void write(const std::filesystem::path& path, const RgbImage& img);
void encode(std::ostream& out, const GrayImage& img);
void encode(std::ostream& out, const RgbImage& img);

}  // namespace pflow::netpbm
