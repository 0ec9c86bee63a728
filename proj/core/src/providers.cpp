#include "pflow/providers.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace pflow {

DetectionBatchResult FileProvider::detect(std::span<const FrameView> frames) {
  DetectionBatchResult out;
  for (const FrameView& f : frames) {
    auto& slot = out[f.index];
    if (f.index >= 0 && f.index < table_.frame_count()) {
      slot = table_.at(f.index);
    }
  }
  return out;
}

bool DropPlan::dropped(int agent_id, FrameIndex frame) const noexcept {
  return std::any_of(drops.begin(), drops.end(), [&](const DropRule& r) {
    return r.agent_id == agent_id && frame >= r.first && frame <= r.last;
  });
}

ScriptedProvider::ScriptedProvider(SyntheticScene scene, DropPlan plan)
    : scene_(std::move(scene)), plan_(std::move(plan)) {
  validate_scene(scene_);
  if (plan_.jitter_sigma < 0.0) {
    throw std::invalid_argument("drop plan: jitter sigma must be >= 0");
  }
  if (plan_.base_confidence < 0.0 || plan_.base_confidence > 1.0) {
    throw std::invalid_argument("drop plan: base confidence must lie in [0, 1]");
  }
}

std::vector<Detection> ScriptedProvider::detections_for(FrameIndex frame) const {
  if (frame < 0 || frame >= scene_.frame_count) {
    throw std::out_of_range("scripted provider: frame " + std::to_string(frame) + " outside scene of " +
                            std::to_string(scene_.frame_count) + " frames");
  }
  std::vector<Detection> out;
  for (const GroundTruthBox& g : ground_truth_frame(scene_, frame)) {
    if (plan_.dropped(g.agent_id, frame) || g.visible_fraction <= plan_.min_visible_fraction) {
      continue;
    }
    BBox box = g.box;
    if (plan_.jitter_sigma > 0.0) {
      std::seed_seq seq{static_cast<std::uint32_t>(plan_.seed), static_cast<std::uint32_t>(plan_.seed >> 32),
                        static_cast<std::uint32_t>(frame), static_cast<std::uint32_t>(g.agent_id)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> noise(0.0, plan_.jitter_sigma);
      box.x += noise(rng);
      box.y += noise(rng);
      box.w = std::max(1.0, box.w + noise(rng));
      box.h = std::max(1.0, box.h + noise(rng));
    }
    double conf = plan_.base_confidence;
    if (plan_.confidence_rule == ConfidenceRule::kVisibleFraction) {
      conf *= g.visible_fraction;
    }
    out.push_back({box, std::clamp(conf, 0.0, 1.0)});
  }
  return out;
}

DetectionBatchResult ScriptedProvider::detect(std::span<const FrameView> frames) {
  DetectionBatchResult out;
  for (const FrameView& f : frames) {
    out[f.index] = detections_for(f.index);
  }
  return out;
}

DetectionBatchResult LatencyShim::detect(std::span<const FrameView> frames) {
  const auto deadline = std::chrono::steady_clock::now() + per_batch_;
  auto out = inner_->detect(frames);
  std::this_thread::sleep_until(deadline);
  return out;
}

}  // namespace pflow
