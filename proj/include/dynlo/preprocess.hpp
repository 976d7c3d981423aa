#pragma once

#include "dynlo/geometry.hpp"
#include "dynlo/kernels.hpp"

#include <array>
#include <cmath>
#include <cstdint>

namespace dynlo {

struct PreprocessParams {
  double self_crop_half_extent = 0.5;
  double voxel_leaf = 0.25;
  std::size_t covariance_knn = 10;
  double plane_epsilon = 1e-3;

  void validate() const;
};

/// Drops points inside the axis-aligned cube |x|,|y|,|z| <= half_extent around
/// the sensor origin. Survivor order is preserved.
PointCloud crop_self_returns(const PointCloud& cloud, double half_extent);

using VoxelKey = std::array<std::int64_t, 3>;

inline VoxelKey voxel_key(const Eigen::Vector3d& p, double leaf) {
  return {static_cast<std::int64_t>(std::floor(p.x() / leaf)),
          static_cast<std::int64_t>(std::floor(p.y() / leaf)),
          static_cast<std::int64_t>(std::floor(p.z() / leaf))};
}

/// Centroid per occupied voxel of an origin-anchored grid, emitted in ascending
/// lexicographic voxel order. Labels, when present, go to the majority label of
/// the voxel (ties count as dynamic). Covariances are dropped.
PointCloud voxel_downsample(const PointCloud& cloud, double leaf);

/// Attaches plane-regularized covariances from each point's k nearest
/// neighbours (the point itself included).
PointCloud estimate_point_covariances(const PointCloud& cloud, std::size_t k, double plane_epsilon,
                                      Execution exec = Execution::kParallel);

}  // namespace dynlo
