#include "dynlo/metrics.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace dynlo {
namespace {

void check_matching(const Trajectory& estimate, const Trajectory& ground_truth) {
  if (estimate.size() != ground_truth.size()) {
    throw std::invalid_argument("trajectory length mismatch: " + std::to_string(estimate.size()) + " vs " +
                                std::to_string(ground_truth.size()));
  }
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    if (estimate[i].scan_index != ground_truth[i].scan_index) {
      throw std::invalid_argument("trajectory scan index mismatch at entry " + std::to_string(i));
    }
  }
}

}  // namespace

Pose align_rigid(std::span<const Eigen::Vector3d> source, std::span<const Eigen::Vector3d> target) {
  if (source.size() != target.size() || source.empty()) {
    throw std::invalid_argument("alignment needs equally sized, non-empty point sets");
  }
  const double n = static_cast<double>(source.size());
  Eigen::Vector3d mu_s = Eigen::Vector3d::Zero();
  Eigen::Vector3d mu_t = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    mu_s += source[i];
    mu_t += target[i];
  }
  mu_s /= n;
  mu_t /= n;
  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) cross += (target[i] - mu_t) * (source[i] - mu_s).transpose();

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) s(2, 2) = -1.0;
  Pose out;
  out.rotation = svd.matrixU() * s * svd.matrixV().transpose();
  out.translation = mu_t - out.rotation * mu_s;
  return out;
}

double ape_rmse(const Trajectory& estimate, const Trajectory& ground_truth) {
  check_matching(estimate, ground_truth);
  if (estimate.empty()) throw std::invalid_argument("empty trajectory");
  Vector3dVector est(estimate.size());
  Vector3dVector gt(estimate.size());
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    est[i] = estimate[i].pose.translation;
    gt[i] = ground_truth[i].pose.translation;
  }
  const Pose align = align_rigid(est, gt);
  double sum = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) sum += (gt[i] - align * est[i]).squaredNorm();
  return std::sqrt(sum / static_cast<double>(est.size()));
}

double rpe_rmse(const Trajectory& estimate, const Trajectory& ground_truth, std::size_t delta) {
  check_matching(estimate, ground_truth);
  if (delta == 0) throw std::invalid_argument("rpe delta must be at least 1");
  if (estimate.size() <= delta) throw std::invalid_argument("trajectory shorter than rpe delta");
  double sum = 0.0;
  const std::size_t pairs = estimate.size() - delta;
  for (std::size_t k = 0; k < pairs; ++k) {
    const Pose gt_rel = ground_truth[k].pose.inverse() * ground_truth[k + delta].pose;
    const Pose est_rel = estimate[k].pose.inverse() * estimate[k + delta].pose;
    sum += (gt_rel.inverse() * est_rel).translation.squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(pairs));
}

double max_z_drift(const Trajectory& estimate, const Trajectory& ground_truth) {
  check_matching(estimate, ground_truth);
  double worst = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    worst = std::max(worst, std::abs(estimate[i].pose.translation.z() - ground_truth[i].pose.translation.z()));
  }
  return worst;
}

MapProvenance& MapProvenance::operator+=(const MapProvenance& other) {
  static_total += other.static_total;
  static_kept += other.static_kept;
  dynamic_total += other.dynamic_total;
  dynamic_kept += other.dynamic_kept;
  return *this;
}

MapProvenance count_provenance(std::span<const PointLabel> source_labels, std::span<const std::uint8_t> kept) {
  if (source_labels.size() != kept.size()) throw std::invalid_argument("label and mask sizes differ");
  MapProvenance p;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (source_labels[i] == PointLabel::kDynamic) {
      ++p.dynamic_total;
      if (kept[i]) ++p.dynamic_kept;
    } else {
      ++p.static_total;
      if (kept[i]) ++p.static_kept;
    }
  }
  return p;
}

MapQuality map_pr_rr_f1(const MapProvenance& p) {
  MapQuality q;
  if (p.static_total > 0) q.preserved_rate = 100.0 * static_cast<double>(p.static_kept) / static_cast<double>(p.static_total);
  if (p.dynamic_total > 0) {
    q.removed_rate =
        100.0 * static_cast<double>(p.dynamic_total - p.dynamic_kept) / static_cast<double>(p.dynamic_total);
  }
  if (q.preserved_rate && q.removed_rate && *q.preserved_rate + *q.removed_rate > 0.0) {
    q.f1 = 2.0 * *q.preserved_rate * *q.removed_rate / (*q.preserved_rate + *q.removed_rate) / 100.0;
  } else if (q.preserved_rate && q.removed_rate) {
    q.f1 = 0.0;
  }
  return q;
}

}  // namespace dynlo
