#pragma once

#include "dynlo/geometry.hpp"
#include "dynlo/kernels.hpp"
#include "dynlo/knn.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace dynlo {

struct GicpParams {
  double max_correspondence_distance = 1.0;
  int max_iterations = 64;
  double translation_epsilon = 1e-4;
  double rotation_epsilon = 1e-4;

  void validate() const;
};

using Correspondence = std::pair<std::uint32_t, std::uint32_t>;  // (source, target)

/// Registration target: a cloud with covariances plus its search tree.
class GicpTarget {
 public:
  explicit GicpTarget(PointCloud cloud);
  GicpTarget(const GicpTarget&) = delete;
  GicpTarget& operator=(const GicpTarget&) = delete;

  const PointCloud& cloud() const { return cloud_; }
  const KdTree& tree() const { return tree_; }

 private:
  PointCloud cloud_;
  KdTree tree_;
};

struct GicpResult {
  Pose pose;
  bool converged = false;
  double final_error = 0.0;
  int iterations = 0;
  std::size_t correspondences = 0;
};

/// Sum of d^T (C_t + R C_s R^T)^-1 d over the given pairs, d = p_t - T p_s.
double gicp_residual(const Pose& transform, const PointCloud& source, const PointCloud& target,
                     std::span<const Correspondence> correspondences);

/// Exact gradient of gicp_residual with respect to a right-multiplied
/// increment T * Exp([w; u]), ordered (w, u).
Vector6d gicp_gradient(const Pose& transform, const PointCloud& source, const PointCloud& target,
                       std::span<const Correspondence> correspondences);

/// Finds T minimising the residual of `source` against `target`, re-searching
/// nearest-neighbour correspondences every iteration.
GicpResult gicp_align(const PointCloud& source, const GicpTarget& target, const Pose& init,
                      const GicpParams& params, Execution exec = Execution::kParallel);
GicpResult gicp_align(const PointCloud& source, const PointCloud& target, const Pose& init,
                      const GicpParams& params, Execution exec = Execution::kParallel);

}  // namespace dynlo
