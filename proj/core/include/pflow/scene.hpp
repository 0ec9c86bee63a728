#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pflow/bbox.hpp"
#include "pflow/detect.hpp"
#include "pflow/image.hpp"

namespace pflow {

struct Waypoint {
  FrameIndex frame = 0;
  double cx = 0.0;
  double cy = 0.0;
};

// A textured rectangle moving along a piecewise-linear path. The agent is
// present from its first to its last waypoint frame.
struct SceneAgent {
  int id = 0;
  std::vector<Waypoint> path;
  double width = 40.0;
  double height = 80.0;
  std::uint64_t texture_seed = 0;
};

struct SyntheticScene {
  int width = 512;
  int height = 288;
  double fps = 25.0;
  FrameIndex frame_count = 0;
  std::vector<SceneAgent> agents;
  std::uint64_t background_seed = 1;
  std::vector<BBox> occluders;  // static, drawn over agents
};

struct GroundTruthBox {
  int agent_id = 0;
  BBox box;
  double visible_fraction = 1.0;
};

using GroundTruthFrame = std::vector<GroundTruthBox>;

// Throws std::invalid_argument naming the offending agent or field.
void validate_scene(const SyntheticScene& scene);

// Box of an agent at a frame, or nothing when the agent is absent.
std::optional<BBox> agent_box(const SceneAgent& agent, FrameIndex frame);

GroundTruthFrame ground_truth_frame(const SyntheticScene& scene, FrameIndex frame);
std::vector<GroundTruthFrame> ground_truth(const SyntheticScene& scene);
DetectionTable ground_truth_table(const SyntheticScene& scene);

// Deterministic render: background value noise, agents in id order, occluders on top.
GrayImage render_frame(const SyntheticScene& scene, FrameIndex frame);

// Three non-overlapping agents on separate horizontal lanes at 512x288, 25 fps:
// agent 1 walks right, agent 2 walks left, agent 3 loiters mid-frame.
SyntheticScene demo_scene(FrameIndex frame_count = 240, std::uint64_t seed = 7);

}  // namespace pflow
