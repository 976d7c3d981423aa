#include "dynlo/preprocess.hpp"

#include "dynlo/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dynlo {

void PreprocessParams::validate() const {
  if (!(self_crop_half_extent > 0.0) || !(voxel_leaf > 0.0) || !(plane_epsilon > 0.0)) {
    throw std::invalid_argument("preprocess parameters must be positive");
  }
  if (covariance_knn < 4) throw std::invalid_argument("covariance_knn must be at least 4");
}

PointCloud crop_self_returns(const PointCloud& cloud, double half_extent) {
  if (!(half_extent > 0.0)) throw std::invalid_argument("crop half extent must be positive");
  PointCloud out;
  out.reserve(cloud.size(), cloud.has_covariances(), cloud.has_labels());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d& p = cloud.points[i];
    if (std::abs(p.x()) <= half_extent && std::abs(p.y()) <= half_extent &&
        std::abs(p.z()) <= half_extent) {
      continue;
    }
    out.push_from(cloud, i);
  }
  return out;
}

PointCloud voxel_downsample(const PointCloud& cloud, double leaf) {
  if (!(leaf > 0.0)) throw std::invalid_argument("voxel leaf must be positive");
  const std::size_t n = cloud.size();
  std::vector<VoxelKey> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = voxel_key(cloud.points[i], leaf);

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return keys[a] < keys[b] || (keys[a] == keys[b] && a < b);
  });

  const bool labeled = cloud.has_labels();
  PointCloud out;
  for (std::size_t begin = 0; begin < n;) {
    std::size_t end = begin;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    std::size_t dynamic = 0;
    while (end < n && keys[order[end]] == keys[order[begin]]) {
      sum += cloud.points[order[end]];
      if (labeled && cloud.labels[order[end]] == PointLabel::kDynamic) ++dynamic;
      ++end;
    }
    const std::size_t count = end - begin;
    out.points.push_back(sum / static_cast<double>(count));
    if (labeled) out.labels.push_back(2 * dynamic >= count ? PointLabel::kDynamic : PointLabel::kStatic);
    begin = end;
  }
  return out;
}

PointCloud estimate_point_covariances(const PointCloud& cloud, std::size_t k, double plane_epsilon,
                                      Execution exec) {
  if (cloud.size() < k || k == 0) {
    throw std::runtime_error("insufficient points for covariance estimation");
  }
  PointCloud out = cloud;
  const KdTree tree(out.points);
  out.covariances = kernels::regularized_covariances(out.points, tree, k, plane_epsilon, exec);
  return out;
}

}  // namespace dynlo
