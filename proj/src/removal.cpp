#include "dynlo/removal.hpp"

namespace dynlo {

RemovalResult remove_dynamic_points(const PointCloud& cloud, std::span<const DetectionBox> dynamic_boxes,
                                    double margin, Execution exec) {
  RemovalResult out;
  if (dynamic_boxes.empty()) {
    out.static_cloud = cloud;
    return out;
  }
  const auto inside = kernels::in_any_box(cloud.points, dynamic_boxes, margin, exec);
  out.static_cloud.reserve(cloud.size(), cloud.has_covariances(), cloud.has_labels());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (inside[i]) {
      out.removed_indices.push_back(i);
    } else {
      out.static_cloud.push_from(cloud, i);
    }
  }
  return out;
}

}  // namespace dynlo
