#pragma once

// Data-parallel inner loops of the pipeline. Each kernel has a plain serial
// reference and an OpenMP version; both produce bit-identical output because
// per-element terms are computed independently and reduced in index order.

#include "dynlo/geometry.hpp"
#include "dynlo/knn.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace dynlo {

enum class Execution { kSerial, kParallel };

namespace kernels {

/// Sample covariance of the point's k nearest neighbours (inclusive), with
/// eigenvalues replaced by (1, 1, plane_epsilon) in descending order.
Eigen::Matrix3d regularized_covariance(std::span<const Eigen::Vector3d> points,
                                       const std::vector<Neighbor>& neighbors, double plane_epsilon);

struct GicpTerms {
  Matrix6d hessian = Matrix6d::Zero();   // sum J^T M J
  Vector6d gradient = Vector6d::Zero();  // d(error)/d(delta), delta right-multiplied
  double error = 0.0;
  std::size_t correspondences = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // (source, target), ascending source
};

/// Per-correspondence contribution.
struct GicpPointTerm {
  Matrix6d hessian;
  Vector6d gradient;
  double error;
};

/// Residual, gradient and Gauss-Newton Hessian of one source/target pair under T.
GicpPointTerm gicp_point_term(const Pose& transform, const Eigen::Vector3d& source_point,
                              const Eigen::Matrix3d& source_cov, const Eigen::Vector3d& target_point,
                              const Eigen::Matrix3d& target_cov);

namespace serial {

Matrix3dVector regularized_covariances(std::span<const Eigen::Vector3d> points, const KdTree& tree,
                                       std::size_t k, double plane_epsilon);

std::vector<std::uint8_t> in_any_box(std::span<const Eigen::Vector3d> points,
                                     std::span<const DetectionBox> boxes, double margin);

GicpTerms gicp_linearize(const Pose& transform, const PointCloud& source, const PointCloud& target,
                         const KdTree& target_tree, double max_squared_distance);

}  // namespace serial

namespace omp {

Matrix3dVector regularized_covariances(std::span<const Eigen::Vector3d> points, const KdTree& tree,
                                       std::size_t k, double plane_epsilon);

std::vector<std::uint8_t> in_any_box(std::span<const Eigen::Vector3d> points,
                                     std::span<const DetectionBox> boxes, double margin);

GicpTerms gicp_linearize(const Pose& transform, const PointCloud& source, const PointCloud& target,
                         const KdTree& target_tree, double max_squared_distance);

}  // namespace omp

// Dispatchers.
Matrix3dVector regularized_covariances(std::span<const Eigen::Vector3d> points, const KdTree& tree,
                                       std::size_t k, double plane_epsilon, Execution exec);
std::vector<std::uint8_t> in_any_box(std::span<const Eigen::Vector3d> points,
                                     std::span<const DetectionBox> boxes, double margin, Execution exec);
GicpTerms gicp_linearize(const Pose& transform, const PointCloud& source, const PointCloud& target,
                         const KdTree& target_tree, double max_squared_distance, Execution exec);

}  // namespace kernels
}  // namespace dynlo
