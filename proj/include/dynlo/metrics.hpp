#pragma once

#include "dynlo/geometry.hpp"

#include <optional>
#include <span>
#include <vector>

namespace dynlo {

struct TrajectoryEntry {
  std::size_t scan_index = 0;
  double timestamp = 0.0;
  Pose pose;
};

using Trajectory = std::vector<TrajectoryEntry>;

/// Least-squares rigid transform (no scale) taking `source` onto `target`.
Pose align_rigid(std::span<const Eigen::Vector3d> source, std::span<const Eigen::Vector3d> target);

/// RMSE of translation residuals after rigidly aligning the estimate to the
/// ground truth. Throws on length or scan-index mismatch.
double ape_rmse(const Trajectory& estimate, const Trajectory& ground_truth);

/// RMSE of |translation((gt_k^-1 gt_k+d)^-1 (est_k^-1 est_k+d))|.
double rpe_rmse(const Trajectory& estimate, const Trajectory& ground_truth, std::size_t delta = 1);

/// Largest |z| deviation of the estimate from the ground truth, unaligned.
double max_z_drift(const Trajectory& estimate, const Trajectory& ground_truth);

/// Point counts over the labeled source points that fed the map.
struct MapProvenance {
  std::size_t static_total = 0;
  std::size_t static_kept = 0;
  std::size_t dynamic_total = 0;
  std::size_t dynamic_kept = 0;

  MapProvenance& operator+=(const MapProvenance& other);
};

MapProvenance count_provenance(std::span<const PointLabel> source_labels, std::span<const std::uint8_t> kept);

struct MapQuality {
  std::optional<double> preserved_rate;  // %
  std::optional<double> removed_rate;    // %
  std::optional<double> f1;              // [0, 1]
};

MapQuality map_pr_rr_f1(const MapProvenance& provenance);

}  // namespace dynlo
