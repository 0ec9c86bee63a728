#include <benchmark/benchmark.h>

#include "pflow/imgproc.hpp"
#include "pflow/scene.hpp"

namespace {

const pflow::GrayImage& frame() {
  static const pflow::GrayImage img = pflow::render_frame(pflow::demo_scene(1), 0);
  return img;
}

void BM_BuildPyramid(benchmark::State& state) {
  const auto levels = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pflow::build_pyramid(frame(), levels));
  }
}
BENCHMARK(BM_BuildPyramid)->Arg(1)->Arg(3)->Arg(4);

void BM_Gradients(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(pflow::gradients(frame()));
  }
}
BENCHMARK(BM_Gradients);

void BM_ShiTomasi(benchmark::State& state) {
  const double side = static_cast<double>(state.range(0));
  const pflow::BBox roi{200, 100, side, side};
  for (auto _ : state) {
    benchmark::DoNotOptimize(pflow::shi_tomasi_corners(frame(), roi));
  }
}
BENCHMARK(BM_ShiTomasi)->Arg(32)->Arg(64)->Arg(128);

void BM_Downscale(benchmark::State& state) {
  const pflow::GrayImage big = pflow::render_frame(
      [] {
        pflow::SyntheticScene s = pflow::demo_scene(1);
        s.width = 1280;
        s.height = 720;
        return s;
      }(),
      0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pflow::downscale(big, 512, 288));
  }
}
BENCHMARK(BM_Downscale);

}  // namespace
