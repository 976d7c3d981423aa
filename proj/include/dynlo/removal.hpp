#pragma once

#include "dynlo/geometry.hpp"
#include "dynlo/kernels.hpp"

#include <span>
#include <vector>

namespace dynlo {

struct RemovalResult {
  PointCloud static_cloud;
  std::vector<std::size_t> removed_indices;  // ascending
};

/// Deletes every point inside (box + margin) of any dynamic box. Survivor order
/// is preserved.
RemovalResult remove_dynamic_points(const PointCloud& cloud, std::span<const DetectionBox> dynamic_boxes,
                                    double margin = kDefaultBoxMargin, Execution exec = Execution::kParallel);

}  // namespace dynlo
