#include "dynlo/kernels.hpp"
#include "dynlo/knn.hpp"
#include "dynlo/preprocess.hpp"
#include "dynlo/sim.hpp"

#include <benchmark/benchmark.h>

namespace dynlo {
namespace {

// One reference-scene scan, preprocessed, shared by every benchmark.
const PointCloud& scan() {
  static const PointCloud cloud = [] {
    const SimOutput out = simulate(reference_scene(2, 20000), 1);
    return estimate_point_covariances(voxel_downsample(crop_self_returns(out.scans[1], 1.5), 0.25), 10, 1e-3);
  }();
  return cloud;
}

const PointCloud& previous_scan() {
  static const PointCloud cloud = [] {
    const SimOutput out = simulate(reference_scene(2, 20000), 1);
    return estimate_point_covariances(voxel_downsample(crop_self_returns(out.scans[0], 1.5), 0.25), 10, 1e-3);
  }();
  return cloud;
}

template <bool kParallel>
void BM_Covariances(benchmark::State& state) {
  const PointCloud& c = scan();
  const KdTree tree(c.points);
  for (auto _ : state) {
    auto out = kParallel ? kernels::omp::regularized_covariances(c.points, tree, 10, 1e-3)
                         : kernels::serial::regularized_covariances(c.points, tree, 10, 1e-3);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.size()));
}

template <bool kParallel>
void BM_InAnyBox(benchmark::State& state) {
  const PointCloud& c = scan();
  std::vector<DetectionBox> boxes;
  for (int i = 0; i < 12; ++i) {
    DetectionBox b;
    b.center = {-20.0 + 3.5 * i, (i % 2 ? 3.5 : -3.5), 0.8};
    b.dims = {4.5, 1.8, 1.6};
    b.yaw = 0.1 * i;
    boxes.push_back(b);
  }
  for (auto _ : state) {
    auto out = kParallel ? kernels::omp::in_any_box(c.points, boxes, 0.1)
                         : kernels::serial::in_any_box(c.points, boxes, 0.1);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.size()));
}

template <bool kParallel>
void BM_GicpLinearize(benchmark::State& state) {
  const PointCloud& source = scan();
  const PointCloud& target = previous_scan();
  const KdTree tree(target.points);
  const Pose guess = Pose::from_euler(0, 0, 0, {0.5, 0, 0});
  for (auto _ : state) {
    auto terms = kParallel ? kernels::omp::gicp_linearize(guess, source, target, tree, 1.0)
                           : kernels::serial::gicp_linearize(guess, source, target, tree, 1.0);
    benchmark::DoNotOptimize(terms.error);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(source.size()));
}

BENCHMARK(BM_Covariances<false>)->Name("covariances/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Covariances<true>)->Name("covariances/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_InAnyBox<false>)->Name("in_any_box/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_InAnyBox<true>)->Name("in_any_box/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GicpLinearize<false>)->Name("gicp_linearize/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GicpLinearize<true>)->Name("gicp_linearize/omp")->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dynlo

BENCHMARK_MAIN();
