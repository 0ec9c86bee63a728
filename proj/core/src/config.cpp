#include "pflow/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "pflow/error.hpp"
#include "pflow/text.hpp"

namespace pflow {

namespace fs = std::filesystem;

std::vector<IniEntry> parse_ini(std::istream& in, const std::string& source_name) {
  std::vector<IniEntry> out;
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#' || t.front() == ';') {
      continue;
    }
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        throw ParseError(source_name, line_no, "malformed section header");
      }
      section = std::string(text::trim(t.substr(1, t.size() - 2)));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(source_name, line_no, "expected 'key = value'");
    }
    const auto key = text::trim(t.substr(0, eq));
    if (key.empty()) {
      throw ParseError(source_name, line_no, "empty key");
    }
    if (section.empty()) {
      throw ParseError(source_name, line_no, "key '" + std::string(key) + "' outside any [section]");
    }
    out.push_back({section, std::string(key), std::string(text::trim(t.substr(eq + 1))), line_no});
  }
  return out;
}

namespace {

double as_double(std::string_view v, const std::string& key) {
  const auto d = text::parse_double(v);
  if (!d) {
    throw ConfigError(key, "expected a number, got '" + std::string(v) + "'");
  }
  return *d;
}

long long as_int(std::string_view v, const std::string& key) {
  const auto i = text::parse_int(v);
  if (!i) {
    throw ConfigError(key, "expected an integer, got '" + std::string(v) + "'");
  }
  return *i;
}

std::size_t as_size(std::string_view v, const std::string& key) {
  const long long i = as_int(v, key);
  if (i < 0) {
    throw ConfigError(key, "must be non-negative");
  }
  return static_cast<std::size_t>(i);
}

std::chrono::microseconds as_ms(std::string_view v, const std::string& key) {
  const double ms = as_double(v, key);
  if (ms < 0.0) {
    throw ConfigError(key, "must be non-negative");
  }
  return std::chrono::microseconds(static_cast<long long>(std::llround(ms * 1000.0)));
}

std::string ms_string(std::chrono::microseconds us) { return text::format_double(static_cast<double>(us.count()) / 1000.0); }

template <typename T>
std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& f) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) {
      s += ',';
    }
    s += f(v[i]);
  }
  return s;
}

std::string d2s(double v) { return text::format_double(v); }

// "id w h frame:cx:cy frame:cx:cy ..."
SceneAgent parse_agent(std::string_view v, const std::string& key) {
  const auto tok = text::split_ws(v);
  if (tok.size() < 4) {
    throw ConfigError(key, "expected 'id width height frame:cx:cy ...'");
  }
  SceneAgent a;
  a.id = static_cast<int>(as_int(tok[0], key));
  a.width = as_double(tok[1], key);
  a.height = as_double(tok[2], key);
  a.texture_seed = static_cast<std::uint64_t>(a.id) * 7919U;
  for (std::size_t i = 3; i < tok.size(); ++i) {
    const auto parts = text::split(tok[i], ':');
    if (parts.size() != 3) {
      throw ConfigError(key, "waypoint '" + std::string(tok[i]) + "' is not frame:cx:cy");
    }
    a.path.push_back({static_cast<FrameIndex>(as_int(parts[0], key)), as_double(parts[1], key), as_double(parts[2], key)});
  }
  return a;
}

std::string agent_string(const SceneAgent& a) {
  std::string s = std::to_string(a.id) + ' ' + d2s(a.width) + ' ' + d2s(a.height);
  for (const Waypoint& w : a.path) {
    s += ' ' + std::to_string(w.frame) + ':' + d2s(w.cx) + ':' + d2s(w.cy);
  }
  return s;
}

BBox parse_box(std::string_view v, const std::string& key) {
  const auto tok = text::split_ws(v);
  if (tok.size() != 4) {
    throw ConfigError(key, "expected 'x y w h'");
  }
  const BBox b{as_double(tok[0], key), as_double(tok[1], key), as_double(tok[2], key), as_double(tok[3], key)};
  if (!b.valid()) {
    throw ConfigError(key, "box width and height must be > 0");
  }
  return b;
}

std::string box_string(const BBox& b) { return d2s(b.x) + ' ' + d2s(b.y) + ' ' + d2s(b.w) + ' ' + d2s(b.h); }

struct Field {
  std::function<void(RunConfig&, std::string_view, const std::string&)> set;
  std::function<std::vector<std::string>(const RunConfig&)> get;
  bool repeatable = false;
};

using Registry = std::vector<std::pair<std::string, Field>>;

Field scalar(std::function<void(RunConfig&, std::string_view, const std::string&)> set,
             std::function<std::string(const RunConfig&)> get) {
  return {std::move(set), [get = std::move(get)](const RunConfig& c) { return std::vector<std::string>{get(c)}; },
          false};
}

#define PFLOW_DOUBLE(field) \
  scalar([](RunConfig& c, std::string_view v, const std::string& k) { c.field = as_double(v, k); }, \
         [](const RunConfig& c) { return d2s(c.field); })
#define PFLOW_INT(field, type) \
  scalar([](RunConfig& c, std::string_view v, const std::string& k) { c.field = static_cast<type>(as_int(v, k)); }, \
         [](const RunConfig& c) { return std::to_string(c.field); })
#define PFLOW_SIZE(field) \
  scalar([](RunConfig& c, std::string_view v, const std::string& k) { c.field = as_size(v, k); }, \
         [](const RunConfig& c) { return std::to_string(c.field); })

const Registry& registry() {
  static const Registry r = {
      {"general.seed", scalar([](RunConfig& c, std::string_view v, const std::string& k) {
                                const long long s = as_int(v, k);
                                if (s < 0) {
                                  throw ConfigError(k, "must be non-negative");
                                }
                                c.seed = static_cast<std::uint64_t>(s);
                              },
                              [](const RunConfig& c) { return std::to_string(c.seed); })},

      {"pipeline.buffer_size", PFLOW_SIZE(pipeline.buffer_size)},
      {"pipeline.detections_per_batch", PFLOW_SIZE(pipeline.detections_per_batch)},
      {"pipeline.processing_width", PFLOW_INT(pipeline.processing_width, int)},
      {"pipeline.processing_height", PFLOW_INT(pipeline.processing_height, int)},
      {"pipeline.native_width", PFLOW_INT(native_width, int)},
      {"pipeline.native_height", PFLOW_INT(native_height, int)},
      {"pipeline.queue_capacity", PFLOW_SIZE(pipeline.queue_capacity)},
      {"pipeline.mode", scalar(
                            [](RunConfig& c, std::string_view v, const std::string& k) {
                              if (v == "pipelined") {
                                c.pipeline.mode = PipelineMode::kPipelined;
                              } else if (v == "sequential") {
                                c.pipeline.mode = PipelineMode::kSequential;
                              } else {
                                throw ConfigError(k, "expected 'pipelined' or 'sequential'");
                              }
                            },
                            [](const RunConfig& c) {
                              return std::string(c.pipeline.mode == PipelineMode::kPipelined ? "pipelined"
                                                                                              : "sequential");
                            })},
      {"pipeline.provider_latency_ms", PFLOW_DOUBLE(provider_latency_ms)},
      {"pipeline.tracker_floor_ms",
       scalar([](RunConfig& c, std::string_view v,
                 const std::string& k) { c.pipeline.tracker_floor_per_batch = as_ms(v, k); },
              [](const RunConfig& c) { return ms_string(c.pipeline.tracker_floor_per_batch); })},

      {"tracker.miss_threshold", PFLOW_INT(tracker.miss_threshold, int)},
      {"tracker.lost_memory_s", PFLOW_DOUBLE(tracker.lost_memory_s)},
      {"tracker.recovery_radius", PFLOW_DOUBLE(tracker.recovery_radius)},
      {"tracker.iou_match_threshold", PFLOW_DOUBLE(tracker.iou_match_threshold)},
      {"tracker.confidence_threshold", PFLOW_DOUBLE(tracker.confidence_threshold)},
      {"tracker.gradient_window", PFLOW_INT(tracker.gradient_window, int)},
      {"tracker.min_flow_points", PFLOW_SIZE(tracker.min_flow_points)},
      {"tracker.max_corners", PFLOW_INT(tracker.corners.max_corners, int)},
      {"tracker.corner_quality", PFLOW_DOUBLE(tracker.corners.quality)},
      {"tracker.corner_min_distance", PFLOW_DOUBLE(tracker.corners.min_distance)},
      {"tracker.flow_window", PFLOW_INT(tracker.flow.window, int)},
      {"tracker.flow_levels", PFLOW_INT(tracker.flow.levels, int)},
      {"tracker.flow_max_iters", PFLOW_INT(tracker.flow.max_iters, int)},
      {"tracker.flow_eps", PFLOW_DOUBLE(tracker.flow.eps)},
      {"tracker.flow_min_eigen", PFLOW_DOUBLE(tracker.flow.min_eigen_floor)},
      {"tracker.flow_max_residual", PFLOW_DOUBLE(tracker.flow.residual_ceiling)},

      {"input.fps", PFLOW_DOUBLE(fps)},
      {"input.source", scalar(
                           [](RunConfig& c, std::string_view v, const std::string& k) {
                             if (v == "scene") {
                               c.source = SourceKind::kScene;
                             } else if (v == "directory") {
                               c.source = SourceKind::kDirectory;
                             } else {
                               throw ConfigError(k, "expected 'scene' or 'directory'");
                             }
                           },
                           [](const RunConfig& c) {
                             return std::string(c.source == SourceKind::kScene ? "scene" : "directory");
                           })},
      {"input.frames_dir", scalar([](RunConfig& c, std::string_view v, const std::string&) { c.frames_dir = v; },
                                  [](const RunConfig& c) { return c.frames_dir.string(); })},
      {"input.provider", scalar(
                             [](RunConfig& c, std::string_view v, const std::string& k) {
                               if (v == "scripted") {
                                 c.provider = ProviderKind::kScripted;
                               } else if (v == "file") {
                                 c.provider = ProviderKind::kFile;
                               } else {
                                 throw ConfigError(k, "expected 'scripted' or 'file'");
                               }
                             },
                             [](const RunConfig& c) {
                               return std::string(c.provider == ProviderKind::kScripted ? "scripted" : "file");
                             })},
      {"input.detections", scalar([](RunConfig& c, std::string_view v, const std::string&) { c.detections_file = v; },
                                  [](const RunConfig& c) { return c.detections_file.string(); })},
      {"input.detection_width", PFLOW_INT(pipeline.detection_width, int)},
      {"input.detection_height", PFLOW_INT(pipeline.detection_height, int)},

      {"scene.preset", scalar(
                           [](RunConfig& c, std::string_view v, const std::string& k) {
                             if (v != "demo" && v != "none") {
                               throw ConfigError(k, "expected 'demo' or 'none'");
                             }
                             c.scene_preset = v;
                           },
                           [](const RunConfig& c) { return c.scene_preset; })},
      {"scene.frames", PFLOW_INT(scene_frames, FrameIndex)},
      {"scene.agent", {[](RunConfig& c, std::string_view v, const std::string& k) {
                         c.extra_agents.push_back(parse_agent(v, k));
                       },
                       [](const RunConfig& c) {
                         std::vector<std::string> out;
                         for (const auto& a : c.extra_agents) {
                           out.push_back(agent_string(a));
                         }
                         return out;
                       },
                       true}},
      {"scene.occluder", {[](RunConfig& c, std::string_view v, const std::string& k) {
                            c.occluders.push_back(parse_box(v, k));
                          },
                          [](const RunConfig& c) {
                            std::vector<std::string> out;
                            for (const auto& b : c.occluders) {
                              out.push_back(box_string(b));
                            }
                            return out;
                          },
                          true}},

      {"drop.drop", {[](RunConfig& c, std::string_view v, const std::string& k) {
                       const auto tok = text::split_ws(v);
                       if (tok.size() != 3) {
                         throw ConfigError(k, "expected 'agent first_frame last_frame'");
                       }
                       DropRule r{static_cast<int>(as_int(tok[0], k)), static_cast<FrameIndex>(as_int(tok[1], k)),
                                  static_cast<FrameIndex>(as_int(tok[2], k))};
                       if (r.last < r.first) {
                         throw ConfigError(k, "last frame precedes first frame");
                       }
                       c.drop.drops.push_back(r);
                     },
                     [](const RunConfig& c) {
                       std::vector<std::string> out;
                       for (const DropRule& r : c.drop.drops) {
                         out.push_back(std::to_string(r.agent_id) + ' ' + std::to_string(r.first) + ' ' +
                                       std::to_string(r.last));
                       }
                       return out;
                     },
                     true}},
      {"drop.jitter_sigma", PFLOW_DOUBLE(drop.jitter_sigma)},
      {"drop.confidence", PFLOW_DOUBLE(drop.base_confidence)},
      {"drop.confidence_rule",
       scalar(
           [](RunConfig& c, std::string_view v, const std::string& k) {
             if (v == "constant") {
               c.drop.confidence_rule = ConfidenceRule::kConstant;
             } else if (v == "visible_fraction") {
               c.drop.confidence_rule = ConfidenceRule::kVisibleFraction;
             } else {
               throw ConfigError(k, "expected 'constant' or 'visible_fraction'");
             }
           },
           [](const RunConfig& c) {
             return std::string(c.drop.confidence_rule == ConfidenceRule::kConstant ? "constant" : "visible_fraction");
           })},
      {"drop.min_visible", PFLOW_DOUBLE(drop.min_visible_fraction)},

      {"analytics.slots", scalar(
                              [](RunConfig& c, std::string_view v, const std::string& k) {
                                c.slots.clear();
                                if (v.empty()) {
                                  return;
                                }
                                for (auto part : text::split(v, ',')) {
                                  const auto ends = text::split(part, '-');
                                  if (ends.size() != 2) {
                                    throw ConfigError(k, "slot '" + std::string(part) + "' is not first-last");
                                  }
                                  FrameSlot s{static_cast<FrameIndex>(as_int(ends[0], k)),
                                              static_cast<FrameIndex>(as_int(ends[1], k))};
                                  if (s.first < 0 || s.last < s.first) {
                                    throw ConfigError(k, "slot '" + std::string(part) + "' is empty or negative");
                                  }
                                  c.slots.push_back(s);
                                }
                              },
                              [](const RunConfig& c) {
                                return join<FrameSlot>(c.slots, [](const FrameSlot& s) {
                                  return std::to_string(s.first) + '-' + std::to_string(s.last);
                                });
                              })},
      {"analytics.kernel", scalar(
                               [](RunConfig& c, std::string_view v, const std::string& k) {
                                 if (v == "tent") {
                                   c.kernel = HeatKernel::kTent;
                                 } else if (v == "gaussian") {
                                   c.kernel = HeatKernel::kGaussian;
                                 } else if (v == "uniform") {
                                   c.kernel = HeatKernel::kUniform;
                                 } else {
                                   throw ConfigError(k, "expected 'tent', 'gaussian' or 'uniform'");
                                 }
                               },
                               [](const RunConfig& c) {
                                 switch (c.kernel) {
                                   case HeatKernel::kTent:
                                     return std::string("tent");
                                   case HeatKernel::kGaussian:
                                     return std::string("gaussian");
                                   case HeatKernel::kUniform:
                                     return std::string("uniform");
                                 }
                                 return std::string("tent");
                               })},

      {"eval.iou_min", PFLOW_DOUBLE(iou_min)},
      {"eval.truth", scalar([](RunConfig& c, std::string_view v, const std::string&) { c.truth_file = v; },
                            [](const RunConfig& c) { return c.truth_file.string(); })},
      {"eval.miss_thresholds", scalar(
                                   [](RunConfig& c, std::string_view v, const std::string& k) {
                                     c.miss_thresholds.clear();
                                     for (auto part : text::split(v, ',')) {
                                       c.miss_thresholds.push_back(static_cast<int>(as_int(part, k)));
                                     }
                                   },
                                   [](const RunConfig& c) {
                                     return join<int>(c.miss_thresholds, [](const int& t) { return std::to_string(t); });
                                   })},

      {"bench.batches", scalar(
                            [](RunConfig& c, std::string_view v, const std::string& k) {
                              c.bench_batches.clear();
                              for (auto part : text::split(v, ',')) {
                                const auto ab = text::split(part, '/');
                                if (ab.size() != 2) {
                                  throw ConfigError(k, "batch '" + std::string(part) + "' is not buffer/detections");
                                }
                                c.bench_batches.emplace_back(as_size(ab[0], k), as_size(ab[1], k));
                              }
                            },
                            [](const RunConfig& c) {
                              return join<std::pair<std::size_t, std::size_t>>(
                                  c.bench_batches, [](const std::pair<std::size_t, std::size_t>& b) {
                                    return std::to_string(b.first) + '/' + std::to_string(b.second);
                                  });
                            })},
      {"bench.provider_latency_ms", scalar(
                                        [](RunConfig& c, std::string_view v, const std::string& k) {
                                          c.bench_provider_latency_ms.clear();
                                          for (auto part : text::split(v, ',')) {
                                            c.bench_provider_latency_ms.push_back(as_double(part, k));
                                          }
                                        },
                                        [](const RunConfig& c) {
                                          return join<double>(c.bench_provider_latency_ms,
                                                              [](const double& d) { return d2s(d); });
                                        })},
      {"bench.tracker_floor_ms", PFLOW_DOUBLE(bench_tracker_floor_ms)},
      {"bench.repetitions", PFLOW_INT(bench_repetitions, int)},
      {"bench.frames", PFLOW_INT(bench_frames, FrameIndex)},
  };
  return r;
}

#undef PFLOW_DOUBLE
#undef PFLOW_INT
#undef PFLOW_SIZE

}  // namespace

SyntheticScene RunConfig::scene() const {
  SyntheticScene s;
  if (scene_preset == "demo") {
    s = demo_scene(scene_frames, seed);
  } else {
    s.frame_count = scene_frames;
    s.background_seed = seed;
  }
  s.width = pipeline.processing_width;
  s.height = pipeline.processing_height;
  s.fps = fps;
  for (SceneAgent a : extra_agents) {
    a.texture_seed ^= seed * 0x9E3779B97F4A7C15ULL;
    s.agents.push_back(std::move(a));
  }
  s.occluders.insert(s.occluders.end(), occluders.begin(), occluders.end());
  return s;
}

void RunConfig::finalize() {
  tracker.fps = fps;
  if (native_width > 0) {
    tracker.raster_scale = static_cast<double>(pipeline.processing_width) / native_width;
  }
  drop.seed = seed;
}

void RunConfig::validate() const {
  if (!(fps > 0.0)) {
    throw ConfigError("input.fps", "must be > 0");
  }
  if (native_width < 1 || native_height < 1) {
    throw ConfigError("pipeline.native_width", "native raster must be positive");
  }
  if (provider_latency_ms < 0.0) {
    throw ConfigError("pipeline.provider_latency_ms", "must be >= 0");
  }
  pipeline.validate();
  tracker.validate();
  if (source == SourceKind::kDirectory) {
    if (frames_dir.empty()) {
      throw ConfigError("input.frames_dir", "required when input.source = directory");
    }
    if (!fs::is_directory(frames_dir)) {
      throw ConfigError("input.frames_dir", "directory not found: " + frames_dir.string());
    }
  }
  if (provider == ProviderKind::kFile) {
    if (detections_file.empty()) {
      throw ConfigError("input.detections", "required when input.provider = file");
    }
    if (!fs::is_regular_file(detections_file)) {
      throw ConfigError("input.detections", "file not found: " + detections_file.string());
    }
  }
  if (provider == ProviderKind::kScripted && source == SourceKind::kDirectory) {
    throw ConfigError("input.provider", "the scripted provider needs input.source = scene");
  }
  if (!truth_file.empty() && !fs::is_regular_file(truth_file)) {
    throw ConfigError("eval.truth", "file not found: " + truth_file.string());
  }
  if (scene_frames < 0) {
    throw ConfigError("scene.frames", "must be >= 0");
  }
  if (scene_preset == "demo" && scene_frames < 2) {
    throw ConfigError("scene.frames", "the demo preset needs at least 2 frames");
  }
  if (drop.jitter_sigma < 0.0) {
    throw ConfigError("drop.jitter_sigma", "must be >= 0");
  }
  if (drop.base_confidence < 0.0 || drop.base_confidence > 1.0) {
    throw ConfigError("drop.confidence", "must lie in [0, 1]");
  }
  if (!(iou_min > 0.0 && iou_min < 1.0)) {
    throw ConfigError("eval.iou_min", "must lie in (0, 1)");
  }
  if (miss_thresholds.empty() ||
      std::any_of(miss_thresholds.begin(), miss_thresholds.end(), [](int t) { return t < 1; })) {
    throw ConfigError("eval.miss_thresholds", "needs at least one threshold, each >= 1");
  }
  for (const auto& [buffer, dets] : bench_batches) {
    if (dets == 0 || buffer == 0 || buffer % dets != 0) {
      throw ConfigError("bench.batches", "buffer_size (" + std::to_string(buffer) +
                                             ") must be divisible by detections_per_batch (" + std::to_string(dets) +
                                             ")");
    }
  }
  if (bench_repetitions < 1) {
    throw ConfigError("bench.repetitions", "must be >= 1");
  }
  if (source == SourceKind::kScene) {
    try {
      validate_scene(scene());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("scene", e.what());
    }
  }
}

RunConfig parse_config(std::istream& in, const std::string& source_name, const fs::path& base_dir) {
  RunConfig cfg;
  std::map<std::string, const Field*> fields;
  for (const auto& [key, field] : registry()) {
    fields.emplace(key, &field);
  }
  std::set<std::string> seen;
  for (const IniEntry& e : parse_ini(in, source_name)) {
    const std::string key = e.section + "." + e.key;
    const auto it = fields.find(key);
    if (it == fields.end()) {
      throw ConfigError(key, "unknown key (" + source_name + ":" + std::to_string(e.line) + ")");
    }
    if (!it->second->repeatable && !seen.insert(key).second) {
      throw ConfigError(key, "given more than once (" + source_name + ":" + std::to_string(e.line) + ")");
    }
    it->second->set(cfg, e.value, key);
  }
  for (fs::path* p : {&cfg.frames_dir, &cfg.detections_file, &cfg.truth_file}) {
    if (!p->empty() && p->is_relative()) {
      *p = base_dir / *p;
    }
  }
  cfg.finalize();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("", "cannot open config file " + path.string());
  }
  return parse_config(in, path.string(), path.parent_path());
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& [key, field] : registry()) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      out << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
      section = sec;
    }
    for (const std::string& v : field.get(cfg)) {
      out << key.substr(dot + 1) << " = " << v << '\n';
    }
  }
  return out.str();
}

}  // namespace pflow
