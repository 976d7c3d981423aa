#include "dynlo/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <stdexcept>

namespace dynlo::kernels {
namespace {

Eigen::Matrix3d fused_information(const Eigen::Matrix3d& fused) {
  Eigen::Matrix3d info;
  bool invertible = false;
  double det = 0.0;
  fused.computeInverseAndDetWithCheck(info, det, invertible, 1e-300);
  if (invertible && info.allFinite()) return info;
  const Eigen::Matrix3d jittered = fused + 1e-9 * Eigen::Matrix3d::Identity();
  jittered.computeInverseAndDetWithCheck(info, det, invertible, 1e-300);
  if (!invertible || !info.allFinite()) throw std::runtime_error("fused covariance singular");
  return info;
}

struct BoxSphere {
  Eigen::Vector3d center;
  double squared_radius;
};

std::vector<BoxSphere> circumscribe(std::span<const DetectionBox> boxes, double margin) {
  std::vector<BoxSphere> spheres;
  spheres.reserve(boxes.size());
  for (const auto& box : boxes) {
    const Eigen::Vector3d half = 0.5 * box.dims + Eigen::Vector3d::Constant(margin);
    // slack keeps corner points that round outward inside the sphere
    spheres.push_back({box.center, half.squaredNorm() * (1.0 + 1e-12) + 1e-12});
  }
  return spheres;
}

std::uint8_t in_any_box_at(const Eigen::Vector3d& p, std::span<const DetectionBox> boxes,
                           const std::vector<BoxSphere>& spheres, double margin) {
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    if ((p - spheres[b].center).squaredNorm() > spheres[b].squared_radius) continue;
    if (point_in_box(p, boxes[b], margin)) return 1;
  }
  return 0;
}

}  // namespace

Eigen::Matrix3d regularized_covariance(std::span<const Eigen::Vector3d> points,
                                       const std::vector<Neighbor>& neighbors, double plane_epsilon) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& n : neighbors) mean += points[n.index];
  mean /= static_cast<double>(neighbors.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& n : neighbors) {
    const Eigen::Vector3d d = points[n.index] - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(neighbors.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  // eigenvalues ascending: the first eigenvector is the surface normal
  const Eigen::Vector3d values(plane_epsilon, 1.0, 1.0);
  const Eigen::Matrix3d& v = solver.eigenvectors();
  return v * values.asDiagonal() * v.transpose();
}

GicpPointTerm gicp_point_term(const Pose& transform, const Eigen::Vector3d& source_point,
                              const Eigen::Matrix3d& source_cov, const Eigen::Vector3d& target_point,
                              const Eigen::Matrix3d& target_cov) {
  const Eigen::Matrix3d& r = transform.rotation;
  const Eigen::Vector3d residual = target_point - transform * source_point;
  const Eigen::Matrix3d info = fused_information(target_cov + r * source_cov * r.transpose());
  const Eigen::Vector3d weighted = info * residual;

  Eigen::Matrix<double, 3, 6> jacobian;
  jacobian.leftCols<3>() = r * skew(source_point);
  jacobian.rightCols<3>() = -r;

  GicpPointTerm term;
  term.error = residual.dot(weighted);
  term.hessian.noalias() = jacobian.transpose() * info * jacobian;
  term.gradient.noalias() = 2.0 * jacobian.transpose() * weighted;
  // the fused covariance also rotates with the increment
  const Eigen::Vector3d u = r.transpose() * weighted;
  term.gradient.head<3>() += 2.0 * u.cross(source_cov * u);
  return term;
}

namespace serial {

Matrix3dVector regularized_covariances(std::span<const Eigen::Vector3d> points, const KdTree& tree,
                                       std::size_t k, double plane_epsilon) {
  Matrix3dVector out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out[i] = regularized_covariance(points, tree.knn(points[i], k), plane_epsilon);
  }
  return out;
}

std::vector<std::uint8_t> in_any_box(std::span<const Eigen::Vector3d> points,
                                     std::span<const DetectionBox> boxes, double margin) {
  const auto spheres = circumscribe(boxes, margin);
  std::vector<std::uint8_t> mask(points.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) mask[i] = in_any_box_at(points[i], boxes, spheres, margin);
  return mask;
}

GicpTerms gicp_linearize(const Pose& transform, const PointCloud& source, const PointCloud& target,
                         const KdTree& target_tree, double max_squared_distance) {
  GicpTerms out;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const auto nn = target_tree.nearest(transform * source.points[i], max_squared_distance);
    if (!nn) continue;
    const auto term = gicp_point_term(transform, source.points[i], source.covariances[i],
                                      target.points[nn->index], target.covariances[nn->index]);
    out.hessian += term.hessian;
    out.gradient += term.gradient;
    out.error += term.error;
    ++out.correspondences;
    out.pairs.emplace_back(static_cast<std::uint32_t>(i), nn->index);
  }
  return out;
}

}  // namespace serial

namespace omp {

Matrix3dVector regularized_covariances(std::span<const Eigen::Vector3d> points, const KdTree& tree,
                                       std::size_t k, double plane_epsilon) {
  Matrix3dVector out(points.size());
  const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = regularized_covariance(points, tree.knn(points[i], k), plane_epsilon);
  }
  return out;
}

std::vector<std::uint8_t> in_any_box(std::span<const Eigen::Vector3d> points,
                                     std::span<const DetectionBox> boxes, double margin) {
  const auto spheres = circumscribe(boxes, margin);
  std::vector<std::uint8_t> mask(points.size(), 0);
  const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) mask[i] = in_any_box_at(points[i], boxes, spheres, margin);
  return mask;
}

GicpTerms gicp_linearize(const Pose& transform, const PointCloud& source, const PointCloud& target,
                         const KdTree& target_tree, double max_squared_distance) {
  const auto n = static_cast<std::int64_t>(source.size());
  std::vector<GicpPointTerm> terms(source.size());
  std::vector<std::uint8_t> matched(source.size(), 0);
  std::vector<std::uint32_t> target_index(source.size(), 0);
  bool failed = false;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto nn = target_tree.nearest(transform * source.points[i], max_squared_distance);
    if (!nn) continue;
    try {
      terms[i] = gicp_point_term(transform, source.points[i], source.covariances[i],
                                 target.points[nn->index], target.covariances[nn->index]);
      matched[i] = 1;
      target_index[i] = nn->index;
    } catch (const std::exception&) {
#pragma omp atomic write
      failed = true;
    }
  }
  if (failed) throw std::runtime_error("fused covariance singular");
  // ordered reduction keeps the sum independent of the thread count
  GicpTerms out;
  for (std::int64_t i = 0; i < n; ++i) {
    if (!matched[i]) continue;
    out.hessian += terms[i].hessian;
    out.gradient += terms[i].gradient;
    out.error += terms[i].error;
    ++out.correspondences;
    out.pairs.emplace_back(static_cast<std::uint32_t>(i), target_index[i]);
  }
  return out;
}

}  // namespace omp

Matrix3dVector regularized_covariances(std::span<const Eigen::Vector3d> points, const KdTree& tree,
                                       std::size_t k, double plane_epsilon, Execution exec) {
  return exec == Execution::kSerial ? serial::regularized_covariances(points, tree, k, plane_epsilon)
                                    : omp::regularized_covariances(points, tree, k, plane_epsilon);
}

std::vector<std::uint8_t> in_any_box(std::span<const Eigen::Vector3d> points,
                                     std::span<const DetectionBox> boxes, double margin, Execution exec) {
  return exec == Execution::kSerial ? serial::in_any_box(points, boxes, margin)
                                    : omp::in_any_box(points, boxes, margin);
}

GicpTerms gicp_linearize(const Pose& transform, const PointCloud& source, const PointCloud& target,
                         const KdTree& target_tree, double max_squared_distance, Execution exec) {
  return exec == Execution::kSerial
             ? serial::gicp_linearize(transform, source, target, target_tree, max_squared_distance)
             : omp::gicp_linearize(transform, source, target, target_tree, max_squared_distance);
}

}  // namespace dynlo::kernels
