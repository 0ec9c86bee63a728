#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <vector>

#include "pflow/detect.hpp"
#include "pflow/scene.hpp"

namespace pflow {

// Serves detections from a preloaded table; frames beyond the table yield
// empty lists.
class FileProvider final : public DetectionProvider {
 public:
  explicit FileProvider(DetectionTable table) : table_(std::move(table)) {}
  DetectionBatchResult detect(std::span<const FrameView> frames) override;

 private:
  DetectionTable table_;
};

struct DropRule {
  int agent_id = 0;
  FrameIndex first = 0;  // inclusive
  FrameIndex last = 0;   // inclusive
};

enum class ConfidenceRule : std::uint8_t {
  kConstant,         // every box gets base_confidence
  kVisibleFraction,  // base_confidence * visible fraction
};

struct DropPlan {
  std::vector<DropRule> drops;
  double jitter_sigma = 0.0;  // px, applied independently to x, y, w, h
  double base_confidence = 0.9;
  ConfidenceRule confidence_rule = ConfidenceRule::kConstant;
  double min_visible_fraction = 0.0;  // boxes at or below this are not reported
  std::uint64_t seed = 0;

  bool dropped(int agent_id, FrameIndex frame) const noexcept;
};

// Ground truth of a synthetic scene perturbed by a drop plan. Output for a
// given frame is a pure function of (scene, plan, frame), independent of the
// order in which frames are requested.
class ScriptedProvider final : public DetectionProvider {
 public:
  ScriptedProvider(SyntheticScene scene, DropPlan plan);
  DetectionBatchResult detect(std::span<const FrameView> frames) override;

  std::vector<Detection> detections_for(FrameIndex frame) const;

 private:
  SyntheticScene scene_;
  DropPlan plan_;
};

// Wraps another provider and sleeps a fixed time per batch, modelling the
// detector's throughput ceiling.
class LatencyShim final : public DetectionProvider {
 public:
  LatencyShim(std::unique_ptr<DetectionProvider> inner, std::chrono::microseconds per_batch)
      : inner_(std::move(inner)), per_batch_(per_batch) {}
  DetectionBatchResult detect(std::span<const FrameView> frames) override;

 private:
  std::unique_ptr<DetectionProvider> inner_;
  std::chrono::microseconds per_batch_;
};

}  // namespace pflow
