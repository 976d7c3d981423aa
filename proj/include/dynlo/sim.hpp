#pragma once

#include "dynlo/detections.hpp"
#include "dynlo/geometry.hpp"
#include "dynlo/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace dynlo {

/// Planar rectangle center + s*half_a + t*half_b, s, t in [-1, 1].
struct SimRect {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_a = Eigen::Vector3d::UnitX();
  Eigen::Vector3d half_b = Eigen::Vector3d::UnitY();
};

struct SimMover {
  DetectionBox box;  // at t = 0
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();

  DetectionBox box_at(double t) const;
  bool moving() const { return velocity.squaredNorm() > 0.0; }
};

struct SimSensor {
  std::size_t points_per_scan = 8000;
  double max_range = 40.0;
  double noise_sigma = 0.02;
  // sample density falls off as (density_range / r)^2 beyond this range
  double density_range = 6.0;
};

struct SimScene {
  double dt = 0.1;
  std::vector<SimRect> rects;
  std::vector<DetectionBox> boxes;  // static solids, side and top faces sampled
  std::vector<SimMover> movers;
  std::vector<Pose> ego_path;  // sensor poses in the scene frame
  SimSensor sensor;

  void validate() const;
};

struct SimOutput {
  std::vector<PointCloud> scans;  // body frame, labeled
  std::vector<DetectionFrame> detections;
  // relative to the first ego pose, so the first entry is the identity
  Trajectory ground_truth;
};

/// Deterministic given (scene, seed). Points on moving movers are labeled
/// dynamic; everything else, parked movers included, static. Samples that fall
/// inside another solid are dropped.
SimOutput simulate(const SimScene& scene, std::uint64_t seed);

/// Line format:
///   dt <s> | points_per_scan <n> | max_range <m> | noise_sigma <m> | density_range <m>
///   rect cx cy cz ax ay az bx by bz
///   box cx cy cz l w h yaw
///   mover <car|cyclist> cx cy cz l w h yaw vx vy vz
///   ego_pose x y z roll pitch yaw
///   ego_motion x0 y0 z0 yaw0 speed yaw_rate count
SimScene parse_scene(std::istream& in);
SimScene load_scene(const std::filesystem::path& path);
std::string serialize_scene(const SimScene& scene);

/// Road corridor with buildings, poles, parked cars and crossing traffic.
SimScene reference_scene(std::size_t scans = 200, std::size_t points_per_scan = 8000);

/// scans/NNNNNN.bin, detections/NNNNNN.txt, labels/NNNNNN.txt, poses.txt (KITTI)
/// and poses_tum.txt.
void write_sim_output(const std::filesystem::path& dir, const SimOutput& output);

}  // namespace dynlo
