#include "dynlo/geometry.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dynlo {

double wrap_angle(double angle) {
  double a = std::fmod(angle, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Pose Pose::from_euler(double roll, double pitch, double yaw, const Eigen::Vector3d& translation) {
  Pose p;
  p.rotation = (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
                   .toRotationMatrix();
  p.translation = translation;
  return p;
}

Pose Pose::from_matrix(const Eigen::Matrix4d& m) {
  Pose p;
  p.rotation = project_to_so3(m.topLeftCorner<3, 3>());
  p.translation = m.topRightCorner<3, 1>();
  return p;
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Pose Pose::inverse() const {
  Pose p;
  p.rotation = rotation.transpose();
  p.translation = -(p.rotation * translation);
  return p;
}

double Pose::roll() const { return std::atan2(rotation(2, 1), rotation(2, 2)); }

double Pose::pitch() const {
  return std::asin(std::clamp(-rotation(2, 0), -1.0, 1.0));
}

double Pose::yaw() const { return std::atan2(rotation(1, 0), rotation(0, 0)); }

Pose operator*(const Pose& a, const Pose& b) { return se3_compose(a, b); }

Pose se3_compose(const Pose& a, const Pose& b) {
  Pose p;
  p.rotation = a.rotation * b.rotation;
  p.translation = a.rotation * b.translation + a.translation;
  const double drift = (p.rotation.transpose() * p.rotation - Eigen::Matrix3d::Identity()).norm();
  if (drift > 1e-9) p.rotation = project_to_so3(p.rotation);
  return p;
}

Pose se3_exp(const Vector6d& twist) {
  Pose p;
  const Eigen::Vector3d w = twist.head<3>();
  const double angle = w.norm();
  if (angle > 0.0) p.rotation = Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
  p.translation = twist.tail<3>();
  return p;
}

Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

double rotation_angle(const Eigen::Matrix3d& r) {
  const double c = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

void PointCloud::reserve(std::size_t n, bool with_cov, bool with_labels) {
  points.reserve(n);
  if (with_cov) covariances.reserve(n);
  if (with_labels) labels.reserve(n);
}

void PointCloud::push_from(const PointCloud& other, std::size_t i) {
  const bool cov = covariances.size() == points.size() && other.has_covariances();
  const bool lab = labels.size() == points.size() && other.has_labels();
  points.push_back(other.points[i]);
  if (cov) covariances.push_back(other.covariances[i]);
  if (lab) labels.push_back(other.labels[i]);
}

void PointCloud::append(const PointCloud& other) {
  const bool cov = (empty() || has_covariances()) && other.has_covariances();
  const bool lab = (empty() || has_labels()) && other.has_labels();
  points.insert(points.end(), other.points.begin(), other.points.end());
  if (cov) {
    covariances.insert(covariances.end(), other.covariances.begin(), other.covariances.end());
  } else {
    covariances.clear();
  }
  if (lab) {
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  } else {
    labels.clear();
  }
}

PointCloud se3_apply(const Pose& pose, const PointCloud& cloud) {
  PointCloud out;
  out.points.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) out.points[i] = pose * cloud.points[i];
  if (cloud.has_covariances()) {
    out.covariances.resize(cloud.size());
    const Eigen::Matrix3d& r = pose.rotation;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      out.covariances[i] = r * cloud.covariances[i] * r.transpose();
    }
  }
  out.labels = cloud.labels;
  return out;
}

std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::kCar: return "car";
    case ObjectClass::kCyclist: return "cyclist";
  }
  return "unknown";
}

ObjectClass parse_object_class(std::string_view label) {
  if (label == "car") return ObjectClass::kCar;
  if (label == "cyclist") return ObjectClass::kCyclist;
  throw std::invalid_argument("unknown class label '" + std::string(label) + "'");
}

bool DetectionBox::valid() const {
  return (dims.array() > 0.0).all() && score >= 0.0 && score <= 1.0 && center.allFinite() &&
         std::isfinite(yaw);
}

bool point_in_box(const Eigen::Vector3d& point, const DetectionBox& box, double margin) {
  const Eigen::Vector3d d = point - box.center;
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  // rotate by -yaw into the box frame
  const double x = c * d.x() + s * d.y();
  const double y = -s * d.x() + c * d.y();
  return std::abs(x) <= 0.5 * box.dims.x() + margin && std::abs(y) <= 0.5 * box.dims.y() + margin &&
         std::abs(d.z()) <= 0.5 * box.dims.z() + margin;
}

DetectionBox transform_box(const Pose& pose, const DetectionBox& box) {
  DetectionBox out = box;
  out.center = pose * box.center;
  out.yaw = wrap_angle(box.yaw + pose.yaw());
  return out;
}

}  // namespace dynlo
