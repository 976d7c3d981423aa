#include "dynlo/gicp.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace dynlo {
namespace {

constexpr std::size_t kMinCorrespondences = 10;
constexpr int kMaxDampingTries = 10;

void require_covariances(const PointCloud& cloud, const char* name) {
  if (cloud.size() < kMinCorrespondences) {
    throw std::invalid_argument(std::string(name) + " cloud needs at least 10 points");
  }
  if (!cloud.has_covariances()) throw std::invalid_argument(std::string(name) + " cloud lacks covariances");
}

}  // namespace

void GicpParams::validate() const {
  if (!(max_correspondence_distance > 0.0) || max_iterations <= 0 || !(translation_epsilon > 0.0) ||
      !(rotation_epsilon > 0.0)) {
    throw std::invalid_argument("gicp parameters must be positive");
  }
}

GicpTarget::GicpTarget(PointCloud cloud) : cloud_(std::move(cloud)), tree_(cloud_.points) {}

double gicp_residual(const Pose& transform, const PointCloud& source, const PointCloud& target,
                     std::span<const Correspondence> correspondences) {
  double error = 0.0;
  for (const auto& [s, t] : correspondences) {
    error += kernels::gicp_point_term(transform, source.points[s], source.covariances[s], target.points[t],
                                      target.covariances[t])
                 .error;
  }
  return error;
}

Vector6d gicp_gradient(const Pose& transform, const PointCloud& source, const PointCloud& target,
                       std::span<const Correspondence> correspondences) {
  Vector6d g = Vector6d::Zero();
  for (const auto& [s, t] : correspondences) {
    g += kernels::gicp_point_term(transform, source.points[s], source.covariances[s], target.points[t],
                                  target.covariances[t])
             .gradient;
  }
  return g;
}

GicpResult gicp_align(const PointCloud& source, const GicpTarget& target, const Pose& init,
                      const GicpParams& params, Execution exec) {
  params.validate();
  require_covariances(source, "source");
  require_covariances(target.cloud(), "target");
  const double max_sq = params.max_correspondence_distance * params.max_correspondence_distance;

  GicpResult result;
  result.pose = init;
  auto terms = kernels::gicp_linearize(init, source, target.cloud(), target.tree(), max_sq, exec);
  if (terms.correspondences < kMinCorrespondences) throw std::runtime_error("insufficient overlap");

  double lambda = 0.0;
  for (int iter = 1; iter <= params.max_iterations; ++iter) {
    result.iterations = iter;
    Vector6d delta = Vector6d::Zero();
    Pose candidate;
    double candidate_error = 0.0;
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxDampingTries && !accepted; ++attempt) {
      Matrix6d h = terms.hessian;
      if (lambda > 0.0) h.diagonal() += lambda * terms.hessian.diagonal().cwiseMax(1e-12);
      delta = h.ldlt().solve(-0.5 * terms.gradient);
      if (!delta.allFinite()) {
        h.diagonal().array() += 1e-9 * (1.0 + terms.hessian.diagonal().maxCoeff());
        delta = h.ldlt().solve(-0.5 * terms.gradient);
      }
      if (!delta.allFinite()) throw std::runtime_error("solver diverged");

      candidate = se3_compose(result.pose, se3_exp(delta));
      candidate_error = gicp_residual(candidate, source, target.cloud(), terms.pairs);
      if (candidate_error <= terms.error) {
        accepted = true;
        lambda = 0.0;
      } else {
        lambda = lambda == 0.0 ? 1e-4 : lambda * 10.0;
      }
    }

    const bool small = delta.tail<3>().norm() < params.translation_epsilon &&
                       delta.head<3>().norm() < params.rotation_epsilon;
    if (!accepted) {
      // no descent direction left at this correspondence set
      result.converged = small;
      result.final_error = terms.error;
      result.correspondences = terms.correspondences;
      return result;
    }
    result.pose = candidate;
    if (small) {
      result.converged = true;
      result.final_error = candidate_error;
      result.correspondences = terms.correspondences;
      return result;
    }
    terms = kernels::gicp_linearize(result.pose, source, target.cloud(), target.tree(), max_sq, exec);
    if (terms.correspondences < kMinCorrespondences) throw std::runtime_error("insufficient overlap");
  }
  result.final_error = terms.error;
  result.correspondences = terms.correspondences;
  return result;
}

GicpResult gicp_align(const PointCloud& source, const PointCloud& target, const Pose& init,
                      const GicpParams& params, Execution exec) {
  require_covariances(target, "target");
  const GicpTarget prepared(target);
  return gicp_align(source, prepared, init, params, exec);
}

}  // namespace dynlo
