#pragma once

#include "dynlo/geometry.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dynlo {

struct Neighbor {
  std::uint32_t index;
  double squared_distance;
};

/// Static 3D k-d tree over a borrowed point array. Query results are ordered by
/// (squared distance, index), so equal-distance ties resolve to the lowest index
/// exactly as a brute-force sort would.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const Eigen::Vector3d> points, int leaf_size = 8);

  std::size_t size() const { return points_.size(); }

  std::vector<Neighbor> knn(const Eigen::Vector3d& query, std::size_t k) const;

  /// Single nearest neighbor with squared distance <= max_squared_distance.
  std::optional<Neighbor> nearest(const Eigen::Vector3d& query, double max_squared_distance) const;

 private:
  struct Node {
    // leaf when axis < 0: [begin, end) into order_
    int axis = -1;
    double split = 0.0;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end, int leaf_size);

  template <typename Visitor>
  void search(std::int32_t node, const Eigen::Vector3d& query, Visitor& visitor) const;

  std::span<const Eigen::Vector3d> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// O(n) reference: k nearest by (squared distance, index).
std::vector<Neighbor> brute_force_knn(std::span<const Eigen::Vector3d> points,
                                      const Eigen::Vector3d& query, std::size_t k);

}  // namespace dynlo
