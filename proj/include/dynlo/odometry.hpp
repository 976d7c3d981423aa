#pragma once

#include "dynlo/gicp.hpp"

#include <optional>
#include <span>

namespace dynlo {

/// Relative motion of the current scan in the previous scan's frame. Without an
/// external prior the initial guess is the identity.
GicpResult scan_to_scan(const PointCloud& current, const GicpTarget& previous, const GicpParams& params,
                        const Pose& init = Pose::identity(), Execution exec = Execution::kParallel);

/// prev_world ∘ rel.
Pose propagate_world(const Pose& prev_world, const Pose& rel);

/// World pose of the current scan refined against a world-frame submap.
GicpResult scan_to_map(const PointCloud& current, const GicpTarget& submap, const Pose& init_world,
                       const GicpParams& params, Execution exec = Execution::kParallel);

struct ConstraintParams {
  int window_scans = 10;
  int min_inliers = 8;
  double plane_inlier_distance = 0.2;
  double z_change_threshold = 0.1;
  double blend_weight = 0.5;

  void validate() const;
};

struct GroundFit {
  Eigen::Vector3d normal;  // unit, normal.z() >= 0
  double offset = 0.0;     // plane: normal . p = offset
  int inlier_count = 0;
};

/// Fits the ground plane through the footprints (center lowered by h/2) of the
/// boxes, all expressed in the current body frame. Returns nullopt when fewer
/// than min_inliers footprints agree or the footprints are nearly collinear.
std::optional<GroundFit> fit_ground_from_boxes(std::span<const DetectionBox> window,
                                               const ConstraintParams& params);

/// Roll and pitch that bring the body-frame ground normal onto world +z.
std::pair<double, double> roll_pitch_from_normal(const Eigen::Vector3d& normal);

/// Blends roll/pitch toward the ground-normal attitude when a fit exists, and
/// t_z toward the previous pose when boxes report flat terrain. Yaw and t_x/t_y
/// are never touched.
Pose apply_consistency_constraint(const Pose& pose, const Pose& prev_pose, const std::optional<GroundFit>& ground,
                                  std::optional<double> mean_box_dz, const ConstraintParams& params);

}  // namespace dynlo
