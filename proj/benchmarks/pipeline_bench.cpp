#include <benchmark/benchmark.h>

#include "pflow/pipeline.hpp"
#include "pflow/providers.hpp"
#include "pflow/scene.hpp"

namespace {

void run_once(pflow::PipelineMode mode) {
  const pflow::SyntheticScene scene = pflow::demo_scene(48);
  pflow::SceneFrameSource source(scene);
  pflow::ScriptedProvider provider(scene, pflow::DropPlan{});
  pflow::PipelineConfig cfg;
  cfg.mode = mode;
  std::size_t frames = 0;
  pflow::run_pipeline(source, provider, cfg, pflow::TrackerConfig{}, [&](const pflow::FrameOutput&) { ++frames; });
  benchmark::DoNotOptimize(frames);
}

void BM_PipelineSequential(benchmark::State& state) {
  for (auto _ : state) {
    run_once(pflow::PipelineMode::kSequential);
  }
  state.SetItemsProcessed(state.iterations() * 48);
}
BENCHMARK(BM_PipelineSequential)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_PipelinePipelined(benchmark::State& state) {
  for (auto _ : state) {
    run_once(pflow::PipelineMode::kPipelined);
  }
  state.SetItemsProcessed(state.iterations() * 48);
}
BENCHMARK(BM_PipelinePipelined)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
