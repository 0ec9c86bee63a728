#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pflow/analytics.hpp"
#include "pflow/pipeline.hpp"
#include "pflow/providers.hpp"
#include "pflow/scene.hpp"
#include "pflow/track.hpp"

namespace pflow {

// Flat "key = value" text with [section] headers. Keys may repeat; order is kept.
struct IniEntry {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line = 0;
};

std::vector<IniEntry> parse_ini(std::istream& in, const std::string& source_name);

enum class SourceKind : std::uint8_t { kScene, kDirectory };
enum class ProviderKind : std::uint8_t { kScripted, kFile };

struct FrameSlot {
  FrameIndex first = 0;  // inclusive
  FrameIndex last = 0;   // inclusive
};

struct RunConfig {
  std::uint64_t seed = 7;
  double fps = 25.0;
  int native_width = 1280;
  int native_height = 720;

  PipelineConfig pipeline;
  TrackerConfig tracker;
  double provider_latency_ms = 0.0;

  SourceKind source = SourceKind::kScene;
  std::filesystem::path frames_dir;
  ProviderKind provider = ProviderKind::kScripted;
  std::filesystem::path detections_file;

  std::string scene_preset = "demo";
  FrameIndex scene_frames = 240;
  std::vector<SceneAgent> extra_agents;
  std::vector<BBox> occluders;

  DropPlan drop;

  std::vector<FrameSlot> slots;  // empty: one slot spanning the run
  HeatKernel kernel = HeatKernel::kTent;

  double iou_min = 0.5;
  std::vector<int> miss_thresholds{5, 10};
  std::filesystem::path truth_file;

  std::vector<std::pair<std::size_t, std::size_t>> bench_batches{{24, 8}};
  std::vector<double> bench_provider_latency_ms{0.0, 100.0};
  double bench_tracker_floor_ms = 100.0;
  int bench_repetitions = 3;
  FrameIndex bench_frames = 240;

  // Scene built from preset, extra agents, occluders and seed.
  SyntheticScene scene() const;
  // Applies the derived fields (tracker fps and raster scale, provider raster).
  void finalize();
  // Throws ConfigError naming the offending key; checks referenced paths.
  void validate() const;
};

// Relative paths are resolved against base_dir. Throws ConfigError or ParseError.
RunConfig parse_config(std::istream& in, const std::string& source_name, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

// Canonical text form; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const RunConfig& cfg);

}  // namespace pflow
