#include "pflow/detect.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "pflow/error.hpp"
#include "pflow/text.hpp"

namespace pflow {

double iou(const BBox& a, const BBox& b) noexcept {
  const BBox in = intersection(a, b);
  if (in.w <= 0.0 || in.h <= 0.0) {
    return 0.0;
  }
  const double inter = in.area();
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

std::vector<Detection> confidence_gate(std::span<const Detection> dets, double threshold) {
  std::vector<Detection> out;
  out.reserve(dets.size());
  std::copy_if(dets.begin(), dets.end(), std::back_inserter(out),
               [threshold](const Detection& d) { return d.confidence > threshold; });
  return out;
}

DetectionTable::DetectionTable(FrameIndex frame_count) {
  if (frame_count < 0) {
    throw std::invalid_argument("DetectionTable: negative frame count");
  }
  frames_.resize(static_cast<std::size_t>(frame_count));
}

std::size_t DetectionTable::total() const noexcept {
  std::size_t n = 0;
  for (const auto& f : frames_) {
    n += f.size();
  }
  return n;
}

DetectionTable parse_detections(std::istream& in, FrameIndex frame_count, const std::string& source_name) {
  DetectionTable table(frame_count);
  std::vector<bool> seen(static_cast<std::size_t>(frame_count), false);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') {
      continue;
    }
    const auto tok = text::split_ws(trimmed);
    auto fail = [&](const std::string& what) { throw ParseError(source_name, line_no, what); };
    if (tok.size() < 2) {
      fail("expected 'frame_index n_boxes ...'");
    }
    const auto frame = text::parse_int(tok[0]);
    const auto count = text::parse_int(tok[1]);
    if (!frame || !count || *count < 0) {
      fail("malformed frame index or box count");
    }
    if (*frame < 0 || *frame >= frame_count) {
      fail("frame index " + std::to_string(*frame) + " outside [0, " + std::to_string(frame_count) + ")");
    }
    if (seen[static_cast<std::size_t>(*frame)]) {
      fail("duplicate record for frame " + std::to_string(*frame));
    }
    seen[static_cast<std::size_t>(*frame)] = true;
    if (tok.size() != 2 + 5 * static_cast<std::size_t>(*count)) {
      fail("expected " + std::to_string(*count) + " boxes of 5 values");
    }
    auto& dets = table.at(static_cast<FrameIndex>(*frame));
    for (long long b = 0; b < *count; ++b) {
      double v[5];
      for (int k = 0; k < 5; ++k) {
        const auto parsed = text::parse_double(tok[2 + 5 * static_cast<std::size_t>(b) + k]);
        if (!parsed) {
          fail("box " + std::to_string(b) + ": malformed number '" +
               std::string(tok[2 + 5 * static_cast<std::size_t>(b) + k]) + "'");
        }
        v[k] = *parsed;
      }
      const Detection d{{v[0], v[1], v[2], v[3]}, v[4]};
      if (!d.box.valid()) {
        fail("box " + std::to_string(b) + ": width and height must be > 0");
      }
      if (d.confidence < 0.0 || d.confidence > 1.0) {
        fail("box " + std::to_string(b) + ": confidence outside [0, 1]");
      }
      dets.push_back(d);
    }
  }
  return table;
}

DetectionTable load_detection_file(const std::filesystem::path& path, FrameIndex frame_count) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open detection file " + path.string());
  }
  return parse_detections(in, frame_count, path.string());
}

void write_detections(std::ostream& out, const DetectionTable& table) {
  for (FrameIndex f = 0; f < table.frame_count(); ++f) {
    const auto& dets = table.at(f);
    if (dets.empty()) {
      continue;
    }
    out << f << ' ' << dets.size();
    for (const Detection& d : dets) {
      out << ' ' << text::format_double(d.box.x) << ' ' << text::format_double(d.box.y) << ' '
          << text::format_double(d.box.w) << ' ' << text::format_double(d.box.h) << ' '
          << text::format_double(d.confidence);
    }
    out << '\n';
  }
}

void save_detection_file(const std::filesystem::path& path, const DetectionTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write detection file " + path.string());
  }
  write_detections(out, table);
}

std::vector<Detection> scale_detections(std::span<const Detection> dets, int from_w, int from_h, int to_w, int to_h) {
  if (from_w <= 0 || from_h <= 0 || to_w <= 0 || to_h <= 0) {
    throw std::invalid_argument("scale_detections: resolutions must be positive");
  }
  const double sx = static_cast<double>(to_w) / from_w;
  const double sy = static_cast<double>(to_h) / from_h;
  std::vector<Detection> out;
  out.reserve(dets.size());
  for (const Detection& d : dets) {
    out.push_back({{d.box.x * sx, d.box.y * sy, d.box.w * sx, d.box.h * sy}, d.confidence});
  }
  return out;
}

}  // namespace pflow
