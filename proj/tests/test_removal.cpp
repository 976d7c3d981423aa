#include "dynlo/removal.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

namespace dynlo {
namespace {

TEST(Removal, NoBoxesKeepsEverything) {
  std::mt19937_64 rng(1);
  const PointCloud c = testing::random_cloud(rng, 200, 10);
  const auto r = remove_dynamic_points(c, {});
  EXPECT_EQ(r.static_cloud.points, c.points);
  EXPECT_TRUE(r.removed_indices.empty());
}

TEST(Removal, AllInsideGivesEmpty) {
  std::mt19937_64 rng(2);
  const PointCloud c = testing::random_cloud(rng, 200, 1);
  DetectionBox b;
  b.dims = {2, 2, 2};
  const std::vector<DetectionBox> boxes{b};
  const auto r = remove_dynamic_points(c, boxes);
  EXPECT_TRUE(r.static_cloud.empty());
  EXPECT_EQ(r.removed_indices.size(), c.size());
}

TEST(Removal, MatchesPointwiseOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    PointCloud c = testing::random_cloud(rng, 500, 10);
    c.labels.assign(c.size(), PointLabel::kStatic);
    for (std::size_t i = 0; i < c.size(); i += 3) c.labels[i] = PointLabel::kDynamic;
    std::vector<DetectionBox> boxes;
    for (int i = 0; i < 1 + trial % 6; ++i) boxes.push_back(testing::random_box(rng, 8));
    for (Execution exec : {Execution::kSerial, Execution::kParallel}) {
      const auto r = remove_dynamic_points(c, boxes, 0.1, exec);
      PointCloud kept;
      std::vector<std::size_t> removed;
      for (std::size_t i = 0; i < c.size(); ++i) {
        bool inside = false;
        for (const auto& b : boxes) inside = inside || point_in_box(c.points[i], b, 0.1);
        if (inside) {
          removed.push_back(i);
        } else {
          kept.points.push_back(c.points[i]);
          kept.labels.push_back(c.labels[i]);
        }
      }
      ASSERT_EQ(r.static_cloud.points, kept.points);
      ASSERT_EQ(r.static_cloud.labels, kept.labels);
      ASSERT_EQ(r.removed_indices, removed);
      ASSERT_EQ(r.static_cloud.size() + r.removed_indices.size(), c.size());
    }
  }
}

TEST(Removal, LargerMarginRemovesSuperset) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const PointCloud c = testing::random_cloud(rng, 400, 6);
    const std::vector<DetectionBox> boxes{testing::random_box(rng, 4), testing::random_box(rng, 4)};
    const auto small = remove_dynamic_points(c, boxes, 0.05);
    const auto large = remove_dynamic_points(c, boxes, 0.3);
    EXPECT_TRUE(std::includes(large.removed_indices.begin(), large.removed_indices.end(),
                              small.removed_indices.begin(), small.removed_indices.end()));
  }
}

TEST(Removal, EquivariantUnderPlanarMotion) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  for (int trial = 0; trial < 50; ++trial) {
    const PointCloud c = testing::random_cloud(rng, 400, 6);
    const std::vector<DetectionBox> boxes{testing::random_box(rng, 4), testing::random_box(rng, 4)};
    const Pose t = Pose::from_euler(0, 0, yaw(rng), testing::random_vector(rng, -20, 20));
    std::vector<DetectionBox> moved;
    for (const auto& b : boxes) moved.push_back(transform_box(t, b));
    const auto a = remove_dynamic_points(c, boxes, 0.1);
    const auto b = remove_dynamic_points(se3_apply(t, c), moved, 0.1);
    EXPECT_EQ(a.removed_indices, b.removed_indices);
  }
}

}  // namespace
}  // namespace dynlo
