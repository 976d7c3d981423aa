#pragma once

#include "dynlo/geometry.hpp"

#include <random>

namespace dynlo::testing {

inline Eigen::Vector3d random_vector(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

inline Pose random_pose(std::mt19937_64& rng, double max_translation = 10.0, double max_angle = kPi) {
  std::uniform_real_distribution<double> a(-max_angle, max_angle);
  std::uniform_real_distribution<double> pitch(-std::min(max_angle, 1.4), std::min(max_angle, 1.4));
  return Pose::from_euler(a(rng), pitch(rng), a(rng), random_vector(rng, -max_translation, max_translation));
}

inline PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double extent) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.push_back(random_vector(rng, -extent, extent));
  return c;
}

// Three orthogonal planar patches plus scattered boxes: enough structure to pin
// all six degrees of freedom.
inline PointCloud structured_cloud(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    switch (i % 5) {
      case 0:
        c.points.emplace_back(8.0 * u(rng), 8.0 * u(rng), -1.5);
        break;
      case 1:
        c.points.emplace_back(8.0 * u(rng), 6.0, 1.5 + 1.5 * u(rng));
        break;
      case 2:
        c.points.emplace_back(7.0, 6.0 * u(rng), 1.5 + 1.5 * u(rng));
        break;
      case 3:
        c.points.emplace_back(-3.0 + 0.5 * u(rng), -4.0, 1.0 * u(rng));
        break;
      default: {
        // slanted patch
        const double s = 3.0 * u(rng);
        const double t = 2.0 * u(rng);
        c.points.emplace_back(-5.0 + 0.6 * s, 2.0 + 0.8 * s, t);
        break;
      }
    }
  }
  return c;
}

inline DetectionBox random_box(std::mt19937_64& rng, double extent) {
  std::uniform_real_distribution<double> dim(0.5, 4.0);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  DetectionBox b;
  b.center = random_vector(rng, -extent, extent);
  b.dims = {dim(rng), dim(rng), dim(rng)};
  b.yaw = yaw(rng);
  return b;
}

inline bool poses_near(const Pose& a, const Pose& b, double tol) {
  return (a.rotation - b.rotation).cwiseAbs().maxCoeff() < tol &&
         (a.translation - b.translation).cwiseAbs().maxCoeff() < tol;
}

}  // namespace dynlo::testing
