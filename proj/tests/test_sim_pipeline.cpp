#include "dynlo/pipeline.hpp"
#include "dynlo/sim.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace dynlo {
namespace {

// Street canyon closed at the far end, with a few static solids; the ego stays put unless told otherwise.
SimScene small_scene(std::size_t scans, double speed = 0.0) {
  std::ostringstream text;
  text << "dt 0.1\n"
          "points_per_scan 3000\n"
          "max_range 30\n"
          "noise_sigma 0\n"
          "rect 0 0 0 30 0 0 0 30 0\n"
          "rect 0 12 4 30 0 0 0 0 4\n"
          "rect 0 -12 4 30 0 0 0 0 4\n"
          "rect 25 0 4 0 12 0 0 0 4\n"
          "box 6 6 1.5 2 2 3 0.3\n"
          "box -8 -5 2 1 1 4 0\n"
          "box 15 -3 1 3 2 2 0.7\n";
  text << "ego_motion 0 0 1.8 0 " << speed << " 0 " << scans << "\n";
  std::istringstream in(text.str());
  return parse_scene(in);
}

TEST(Sim, NoMoversMeansNoDynamicLabels) {
  const SimOutput out = simulate(small_scene(3), 1);
  ASSERT_EQ(out.scans.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_TRUE(out.detections[k].boxes.empty());
    EXPECT_EQ(out.scans[k].labels.size(), out.scans[k].size());
    EXPECT_EQ(std::count(out.scans[k].labels.begin(), out.scans[k].labels.end(), PointLabel::kDynamic), 0);
    EXPECT_GT(out.scans[k].size(), 2000u);
  }
  EXPECT_TRUE(testing::poses_near(out.ground_truth[0].pose, Pose::identity(), 1e-15));
}

TEST(Sim, NoiselessWallIsPlanar) {
  SimScene s;
  s.sensor.noise_sigma = 0.0;
  s.sensor.points_per_scan = 500;
  s.rects.push_back({{10, 0, 0}, {0, 5, 0}, {0, 0, 5}});
  s.ego_path.push_back(Pose::from_euler(0.02, -0.01, 0.3, {0, 0, 1}));
  const SimOutput out = simulate(s, 2);
  ASSERT_FALSE(out.scans[0].empty());
  for (const auto& p : out.scans[0].points) EXPECT_NEAR((s.ego_path[0] * p).x(), 10.0, 1e-9);
}

TEST(Sim, MoverAdvancesWithVelocity) {
  SimMover m;
  m.box.center = {1, 2, 0.8};
  m.velocity = {5, 0, 0};
  const DetectionBox b = m.box_at(0.1);
  EXPECT_NEAR(b.center.x() - m.box.center.x(), 0.5, 1e-12);
  EXPECT_EQ(b.center.y(), 2.0);
  EXPECT_TRUE(m.moving());
}

TEST(Sim, MovingMoverLabeledAndDetected) {
  SimScene s = small_scene(2);
  SimMover car;
  car.box.center = {8, 0, 0.8};
  car.box.dims = {4.5, 1.8, 1.6};
  car.velocity = {0, 5, 0};
  s.movers.push_back(car);
  SimMover parked = car;
  parked.box.center = {-8, 6, 0.8};
  parked.velocity.setZero();
  s.movers.push_back(parked);
  const SimOutput out = simulate(s, 3);
  ASSERT_EQ(out.detections[1].boxes.size(), 2u);
  const auto& labels = out.scans[1].labels;
  const auto dynamic = std::count(labels.begin(), labels.end(), PointLabel::kDynamic);
  EXPECT_GT(dynamic, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == PointLabel::kDynamic) {
      EXPECT_TRUE(point_in_box(out.scans[1].points[i], out.detections[1].boxes[0], 0.01));
    }
  }
}

TEST(Sim, DeterministicPerSeed) {
  const SimScene s = small_scene(4, 5.0);
  const SimOutput a = simulate(s, 7);
  const SimOutput b = simulate(s, 7);
  const SimOutput c = simulate(s, 8);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(a.scans[k].points, b.scans[k].points);
  EXPECT_NE(a.scans[0].points, c.scans[0].points);
}

TEST(Sim, SceneTextRoundTrip) {
  const SimScene s = reference_scene(5, 1000);
  std::istringstream in(serialize_scene(s));
  const SimScene back = parse_scene(in);
  EXPECT_EQ(back.rects.size(), s.rects.size());
  EXPECT_EQ(back.boxes.size(), s.boxes.size());
  ASSERT_EQ(back.movers.size(), s.movers.size());
  for (std::size_t i = 0; i < s.movers.size(); ++i) EXPECT_EQ(back.movers[i].velocity, s.movers[i].velocity);
  ASSERT_EQ(back.ego_path.size(), 5u);
  // poses travel as Euler angles, so agreement is to rounding
  for (std::size_t i = 0; i < 5; ++i) EXPECT_TRUE(testing::poses_near(back.ego_path[i], s.ego_path[i], 1e-12));
}

TEST(Sim, BadSceneLineRejected) {
  std::istringstream in("rect 1 2 3\n");
  EXPECT_THROW(parse_scene(in), std::runtime_error);
}

TEST(Pipeline, SingleScanIsIdentity) {
  const SimOutput out = simulate(small_scene(1), 4);
  VectorSource source(out.scans, out.detections, 0.1);
  const PipelineResult r = run_pipeline(source, PipelineConfig{});
  ASSERT_EQ(r.trajectory.size(), 1u);
  EXPECT_EQ(r.trajectory[0].pose.matrix(), Pose::identity().matrix());
  EXPECT_EQ(r.stats[0].keyframe, true);
  EXPECT_GT(r.map.size(), 0u);
}

TEST(Pipeline, StationaryStaticSceneStaysPut) {
  SimScene s = small_scene(15);
  s.sensor.noise_sigma = 0.01;
  const SimOutput out = simulate(s, 5);
  VectorSource source(out.scans, out.detections, 0.1);
  const PipelineResult r = run_pipeline(source, PipelineConfig{});
  ASSERT_EQ(r.trajectory.size(), 15u);
  for (const auto& e : r.trajectory) EXPECT_LT(e.pose.translation.norm(), 0.05);
  EXPECT_EQ(r.solver_failures, 0u);
}

TEST(Pipeline, TracksForwardMotion) {
  SimScene s = small_scene(20, 5.0);
  s.sensor.noise_sigma = 0.01;
  const SimOutput out = simulate(s, 6);
  VectorSource source(out.scans, out.detections, 0.1);
  const PipelineResult r = run_pipeline(source, PipelineConfig{});
  EXPECT_LT(ape_rmse(r.trajectory, out.ground_truth), 0.1);
  EXPECT_NEAR(r.trajectory.back().pose.translation.x(), 9.5, 0.2);
}

TEST(Pipeline, SerialAndParallelAgree) {
  const SimOutput out = simulate(small_scene(6, 3.0), 9);
  VectorSource a(out.scans, out.detections, 0.1);
  VectorSource b(out.scans, out.detections, 0.1);
  const PipelineResult ra = run_pipeline(a, PipelineConfig{}, Execution::kSerial);
  const PipelineResult rb = run_pipeline(b, PipelineConfig{}, Execution::kParallel);
  for (std::size_t i = 0; i < ra.trajectory.size(); ++i) {
    EXPECT_EQ(ra.trajectory[i].pose.matrix(), rb.trajectory[i].pose.matrix());
  }
}

TEST(Pipeline, StageTimeMeans) {
  std::vector<ScanStats> stats(2);
  stats[0].preprocess_ms = 1;
  stats[1].preprocess_ms = 3;
  stats[1].odometry_ms = 4;
  const StageTimes t = mean_stage_times(stats);
  EXPECT_DOUBLE_EQ(t.preprocess_ms, 2.0);
  EXPECT_DOUBLE_EQ(t.odometry_ms, 2.0);
  EXPECT_DOUBLE_EQ(t.total_ms(), 4.0);
}

}  // namespace
}  // namespace dynlo
