#include "dynlo/odometry.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace dynlo {
namespace {

// Footprints spread less than this along their second principal axis (m^2)
// only pin down a line, not a plane.
constexpr double kMinLateralVariance = 0.25;

struct PlaneFit {
  Eigen::Vector3d normal;
  double offset;
  double lateral_variance;
};

PlaneFit fit_plane(const std::vector<Eigen::Vector3d>& points) {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& p : points) scatter += (p - centroid) * (p - centroid).transpose();
  scatter /= static_cast<double>(points.size());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(scatter);
  Eigen::Vector3d normal = solver.eigenvectors().col(0);
  if (normal.z() < 0.0) normal = -normal;
  return {normal, normal.dot(centroid), solver.eigenvalues()(1)};
}

}  // namespace

GicpResult scan_to_scan(const PointCloud& current, const GicpTarget& previous, const GicpParams& params,
                        const Pose& init, Execution exec) {
  return gicp_align(current, previous, init, params, exec);
}

Pose propagate_world(const Pose& prev_world, const Pose& rel) { return se3_compose(prev_world, rel); }

GicpResult scan_to_map(const PointCloud& current, const GicpTarget& submap, const Pose& init_world,
                       const GicpParams& params, Execution exec) {
  return gicp_align(current, submap, init_world, params, exec);
}

void ConstraintParams::validate() const {
  if (window_scans < 1 || min_inliers < 3 || !(plane_inlier_distance > 0.0) || !(z_change_threshold > 0.0)) {
    throw std::invalid_argument("constraint window and thresholds must be positive");
  }
  if (!(blend_weight >= 0.0 && blend_weight <= 1.0)) throw std::invalid_argument("blend_weight must lie in [0, 1]");
}

std::optional<GroundFit> fit_ground_from_boxes(std::span<const DetectionBox> window,
                                               const ConstraintParams& params) {
  if (window.size() < static_cast<std::size_t>(std::max(params.min_inliers, 3))) return std::nullopt;
  std::vector<Eigen::Vector3d> footprints;
  footprints.reserve(window.size());
  for (const auto& box : window) footprints.push_back(box.center - Eigen::Vector3d(0.0, 0.0, 0.5 * box.dims.z()));

  const PlaneFit first = fit_plane(footprints);
  std::vector<Eigen::Vector3d> inliers;
  for (const auto& p : footprints) {
    if (std::abs(first.normal.dot(p) - first.offset) <= params.plane_inlier_distance) inliers.push_back(p);
  }
  if (inliers.size() < static_cast<std::size_t>(params.min_inliers)) return std::nullopt;

  const PlaneFit refit = fit_plane(inliers);
  if (refit.lateral_variance < kMinLateralVariance) return std::nullopt;
  return GroundFit{refit.normal, refit.offset, static_cast<int>(inliers.size())};
}

std::pair<double, double> roll_pitch_from_normal(const Eigen::Vector3d& normal) {
  const Eigen::Vector3d n = normal.normalized();
  const double roll = std::atan2(n.y(), n.z());
  const double pitch = std::atan2(-n.x(), std::hypot(n.y(), n.z()));
  return {roll, pitch};
}

Pose apply_consistency_constraint(const Pose& pose, const Pose& prev_pose, const std::optional<GroundFit>& ground,
                                  std::optional<double> mean_box_dz, const ConstraintParams& params) {
  Pose out = pose;
  const double w = params.blend_weight;
  if (ground) {
    const auto [ground_roll, ground_pitch] = roll_pitch_from_normal(ground->normal);
    const double roll = pose.roll();
    const double pitch = pose.pitch();
    const double new_roll = roll + w * wrap_angle(ground_roll - roll);
    const double new_pitch = pitch + w * wrap_angle(ground_pitch - pitch);
    out.rotation = Pose::from_euler(new_roll, new_pitch, pose.yaw()).rotation;
  }
  if (mean_box_dz && std::abs(*mean_box_dz) < params.z_change_threshold) {
    out.translation.z() = w * prev_pose.translation.z() + (1.0 - w) * pose.translation.z();
  }
  return out;
}

}  // namespace dynlo
