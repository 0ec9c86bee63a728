#include "pflow/netpbm.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace pflow::netpbm {

namespace {

// Reads one ASCII header integer, skipping whitespace and '#' comments.
int read_header_int(std::istream& in, const std::string& source) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  if (!(in >> value) || value < 0) {
    throw std::runtime_error(source + ": malformed netpbm header");
  }
  return value;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  return out;
}

}  // namespace

std::variant<GrayImage, RgbImage> decode(std::istream& in, const std::string& source_name) {
  char magic[2] = {};
  if (!in.read(magic, 2) || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw std::runtime_error(source_name + ": not a binary P5/P6 file");
  }
  const int width = read_header_int(in, source_name);
  const int height = read_header_int(in, source_name);
  const int maxval = read_header_int(in, source_name);
  if (width < 1 || height < 1) {
    throw std::runtime_error(source_name + ": zero image dimension");
  }
  if (maxval != 255) {
    throw std::runtime_error(source_name + ": only maxval 255 is supported");
  }
  // Exactly one whitespace byte separates the header from the raster.
  in.get();

  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (magic[1] == '5') {
    std::vector<std::uint8_t> data(n);
    if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n))) {
      throw std::runtime_error(source_name + ": truncated raster");
    }
    return GrayImage(width, height, std::move(data));
  }
  std::vector<std::uint8_t> raw(n * 3);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw std::runtime_error(source_name + ": truncated raster");
  }
  RgbImage img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
      img.at(x, y) = {raw[i], raw[i + 1], raw[i + 2]};
    }
  }
  return img;
}

std::variant<GrayImage, RgbImage> read_any(const std::filesystem::path& path) {
  auto in = open_in(path);
  return decode(in, path.string());
}

GrayImage read_gray(const std::filesystem::path& path) {
  auto img = read_any(path);
  if (auto* rgb = std::get_if<RgbImage>(&img)) {
    return to_gray(*rgb);
  }
  return std::get<GrayImage>(std::move(img));
}

RgbImage read_rgb(const std::filesystem::path& path) {
  auto img = read_any(path);
  if (auto* gray = std::get_if<GrayImage>(&img)) {
    return to_rgb(*gray);
  }
  return std::get<RgbImage>(std::move(img));
}

void encode(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  const auto px = img.pixels();
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

void encode(std::ostream& out, const RgbImage& img) {
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<char> raw;
  raw.reserve(img.pixels().size() * 3);
  for (const Rgb& c : img.pixels()) {
    raw.push_back(static_cast<char>(c.r));
    raw.push_back(static_cast<char>(c.g));
    raw.push_back(static_cast<char>(c.b));
  }
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
}

void write(const std::filesystem::path& path, const GrayImage& img) {
  auto out = open_out(path);
  encode(out, img);
}

void write(const std::filesystem::path& path, const RgbImage& img) {
  auto out = open_out(path);
  encode(out, img);
}

}  // namespace pflow::netpbm
