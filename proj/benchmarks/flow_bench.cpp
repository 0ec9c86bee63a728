#include <benchmark/benchmark.h>

#include "pflow/flow.hpp"
#include "pflow/imgproc.hpp"
#include "pflow/scene.hpp"

namespace {

void BM_LucasKanade(benchmark::State& state) {
  const pflow::SyntheticScene scene = pflow::demo_scene(2);
  const pflow::Pyramid a = pflow::build_pyramid(pflow::render_frame(scene, 0), 3);
  const pflow::Pyramid b = pflow::build_pyramid(pflow::render_frame(scene, 1), 3);
  std::vector<pflow::Point2f> points;
  for (const pflow::GroundTruthBox& g : pflow::ground_truth_frame(scene, 0)) {
    const auto corners = pflow::shi_tomasi_corners(a.level(0), g.box);
    points.insert(points.end(), corners.begin(), corners.end());
  }
  points.resize(std::min<std::size_t>(points.size(), static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pflow::lk_track(a, b, points));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(points.size()));
}
BENCHMARK(BM_LucasKanade)->Arg(10)->Arg(30)->Arg(90);

}  // namespace
