#include "dynlo/preprocess.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>


namespace dynlo {
namespace {

TEST(Crop, FarPointsUnchanged) {
  std::mt19937_64 rng(1);
  PointCloud c;
  for (int i = 0; i < 100; ++i) c.points.push_back(testing::random_vector(rng, -1, 1).normalized() * 11.0);
  const PointCloud out = crop_self_returns(c, 0.5);
  EXPECT_EQ(out.points, c.points);
}

TEST(Crop, OriginRemoved) {
  PointCloud c;
  c.points.emplace_back(0, 0, 0);
  EXPECT_TRUE(crop_self_returns(c, 0.5).empty());
}

TEST(Crop, MatchesPredicateScan) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    PointCloud c = testing::random_cloud(rng, 500, 1.5);
    c.labels.resize(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) c.labels[i] = i % 3 ? PointLabel::kStatic : PointLabel::kDynamic;
    const PointCloud out = crop_self_returns(c, 0.5);
    PointCloud expected;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto& p = c.points[i];
      if (!(std::abs(p.x()) <= 0.5 && std::abs(p.y()) <= 0.5 && std::abs(p.z()) <= 0.5)) {
        expected.points.push_back(p);
        expected.labels.push_back(c.labels[i]);
      }
    }
    EXPECT_EQ(out.points, expected.points);
    EXPECT_EQ(out.labels, expected.labels);
  }
}

TEST(Voxel, SinglePoint) {
  PointCloud c;
  c.points.emplace_back(1.3, -2.7, 0.4);
  const PointCloud out = voxel_downsample(c, 0.25);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.points[0], c.points[0]);
}

TEST(Voxel, CubeCornersCollapse) {
  PointCloud c;
  const Eigen::Vector3d center(0.125, 0.125, 0.125);
  for (int i = 0; i < 8; ++i) {
    c.points.push_back(center + 0.05 * Eigen::Vector3d(i & 1 ? 1 : -1, i & 2 ? 1 : -1, i & 4 ? 1 : -1));
  }
  const PointCloud out = voxel_downsample(c, 0.25);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_LT((out.points[0] - center).norm(), 1e-15);
}

TEST(Voxel, MatchesGroupingOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const PointCloud c = testing::random_cloud(rng, 1000, 3.0);
    const PointCloud out = voxel_downsample(c, 0.5);
    const PointCloud expected = oracle::voxel(c, 0.5);
    ASSERT_EQ(out.size(), expected.size());
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_LT((out.points[i] - expected.points[i]).norm(), 1e-12);
  }
}

TEST(Voxel, OutputNearInput) {
  std::mt19937_64 rng(4);
  const double leaf = 0.3;
  const PointCloud c = testing::random_cloud(rng, 2000, 2.0);
  const PointCloud out = voxel_downsample(c, leaf);
  EXPECT_LE(out.size(), c.size());
  for (const auto& q : out.points) {
    double best = 1e9;
    for (const auto& p : c.points) best = std::min(best, (p - q).norm());
    EXPECT_LE(best, leaf * std::sqrt(3.0) / 2.0 + 1e-12);
  }
}

TEST(Voxel, GridAnchoredUnderLeafTranslation) {
  // dyadic coordinates keep the shifted sums exact
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cell(-256, 256);
  PointCloud c;
  for (int i = 0; i < 1000; ++i) c.points.emplace_back(cell(rng) / 64.0 + 1.0 / 128, cell(rng) / 64.0 + 1.0 / 128,
                                                       cell(rng) / 64.0 + 1.0 / 128);
  const double leaf = 0.25;
  const Eigen::Vector3d shift = leaf * Eigen::Vector3d(3, -7, 2);
  PointCloud moved = c;
  for (auto& p : moved.points) p += shift;
  const PointCloud a = voxel_downsample(c, leaf);
  const PointCloud b = voxel_downsample(moved, leaf);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT((a.points[i] + shift - b.points[i]).norm(), 1e-12);
}

TEST(Voxel, MajorityLabel) {
  PointCloud c;
  c.points = {{0.1, 0.1, 0.1}, {0.12, 0.1, 0.1}, {0.14, 0.1, 0.1}, {1.1, 0.1, 0.1}, {1.12, 0.1, 0.1}};
  c.labels = {PointLabel::kDynamic, PointLabel::kStatic, PointLabel::kStatic, PointLabel::kDynamic,
              PointLabel::kStatic};
  const PointCloud out = voxel_downsample(c, 0.5);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.labels[0], PointLabel::kStatic);
  EXPECT_EQ(out.labels[1], PointLabel::kDynamic);  // tie counts as dynamic
}

TEST(Covariance, CoplanarNeighborsGivePlaneNormal) {
  std::mt19937_64 rng(6);
  const Eigen::Vector3d normal = Eigen::Vector3d(0.3, -0.5, 0.8).normalized();
  const Eigen::Vector3d a = normal.unitOrthogonal();
  const Eigen::Vector3d b = normal.cross(a);
  std::uniform_real_distribution<double> u(-1, 1);
  PointCloud c;
  for (int i = 0; i < 10; ++i) c.points.push_back(Eigen::Vector3d(1, 2, 3) + u(rng) * a + u(rng) * b);
  const PointCloud out = estimate_point_covariances(c, 10, 1e-3);
  for (const auto& cov : out.covariances) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> s(cov);
    const double angle = std::acos(std::min(1.0, std::abs(s.eigenvectors().col(0).dot(normal))));
    EXPECT_LT(angle, 1e-6);
  }
}

TEST(Covariance, RegularizedSpectrum) {
  std::mt19937_64 rng(7);
  const PointCloud c = testing::random_cloud(rng, 300, 3);
  for (Execution exec : {Execution::kSerial, Execution::kParallel}) {
    const PointCloud out = estimate_point_covariances(c, 10, 1e-3, exec);
    ASSERT_TRUE(out.has_covariances());
    for (const auto& cov : out.covariances) {
      EXPECT_LT((cov - cov.transpose()).norm(), 1e-12);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> s(cov);
      EXPECT_NEAR(s.eigenvalues()(0), 1e-3, 1e-12);
      EXPECT_NEAR(s.eigenvalues()(1), 1.0, 1e-12);
      EXPECT_NEAR(s.eigenvalues()(2), 1.0, 1e-12);
      EXPECT_NEAR(s.eigenvalues()(2) / s.eigenvalues()(0), 1e3, 1e-6);
    }
  }
}

TEST(Covariance, TooFewPoints) {
  std::mt19937_64 rng(8);
  const PointCloud c = testing::random_cloud(rng, 9, 3);
  try {
    estimate_point_covariances(c, 10, 1e-3);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "insufficient points for covariance estimation");
  }
}

TEST(Preprocess, ParamValidation) {
  PreprocessParams p;
  EXPECT_NO_THROW(p.validate());
  p.voxel_leaf = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace dynlo
