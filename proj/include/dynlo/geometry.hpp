#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dynlo {

using Vector3dVector = std::vector<Eigen::Vector3d>;
using Matrix3dVector = std::vector<Eigen::Matrix3d>;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Wraps into (-pi, pi].
double wrap_angle(double angle);

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Rigid transform in SE(3). Maps points from the child frame into the parent
/// frame: x_parent = rotation * x_child + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }
  static Pose from_euler(double roll, double pitch, double yaw,
                         const Eigen::Vector3d& translation = Eigen::Vector3d::Zero());
  static Pose from_matrix(const Eigen::Matrix4d& m);

  Eigen::Matrix4d matrix() const;
  Pose inverse() const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& x) const { return rotation * x + translation; }

  // ZYX convention: R = Rz(yaw) * Ry(pitch) * Rx(roll).
  double roll() const;
  double pitch() const;
  double yaw() const;
};

Pose operator*(const Pose& a, const Pose& b);

/// a ∘ b with the rotation projected back onto SO(3) when drift exceeds 1e-9.
Pose se3_compose(const Pose& a, const Pose& b);

/// Exponential map of a twist (rotation vector, translation) with the
/// translation applied after the rotation: Exp(w, u) = (exp(w^), u).
Pose se3_exp(const Vector6d& twist);

Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& m);
double rotation_angle(const Eigen::Matrix3d& r);

enum class PointLabel : std::uint8_t { kStatic = 0, kDynamic = 1 };

struct PointCloud {
  Vector3dVector points;
  Matrix3dVector covariances;       // empty or points.size()
  std::vector<PointLabel> labels;   // empty or points.size()

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_covariances() const { return !points.empty() && covariances.size() == points.size(); }
  bool has_labels() const { return !points.empty() && labels.size() == points.size(); }

  void reserve(std::size_t n, bool with_cov, bool with_labels);
  // Appends point i of other, carrying whichever attributes this cloud holds.
  void push_from(const PointCloud& other, std::size_t i);
  void append(const PointCloud& other);
};

/// x -> R x + t, C -> R C R^T, labels preserved.
PointCloud se3_apply(const Pose& pose, const PointCloud& cloud);

enum class ObjectClass : std::uint8_t { kCar, kCyclist };

std::string_view to_string(ObjectClass c);
ObjectClass parse_object_class(std::string_view label);

/// Oriented box, yaw about +z measured from +x.
struct DetectionBox {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  Eigen::Vector3d dims = Eigen::Vector3d::Ones();  // l, w, h
  ObjectClass object_class = ObjectClass::kCar;
  double score = 1.0;

  bool valid() const;
};

constexpr double kDefaultBoxMargin = 0.1;

bool point_in_box(const Eigen::Vector3d& point, const DetectionBox& box,
                  double margin = kDefaultBoxMargin);

/// Box expressed in the parent frame of `pose`. Only the yaw of the rotation
/// is carried into the box; boxes stay upright.
DetectionBox transform_box(const Pose& pose, const DetectionBox& box);

}  // namespace dynlo
