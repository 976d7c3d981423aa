#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace dynlo {

struct HullSite {
  Eigen::Vector2d position;
  std::uint64_t id;
};

/// Convex hull vertices (counter-clockwise from the lowest-leftmost site) by
/// Andrew's monotone chain. Collinear boundary sites are excluded; coincident
/// sites are represented by the lowest id. Fewer than 3 sites returns them all.
std::vector<HullSite> convex_hull(std::span<const HullSite> sites);

/// Concave boundary: starting from the convex hull, every edge longer than
/// alpha is split at the unused site minimising the longer of the two new
/// edges, recursively, as long as that shortens the edge.
std::vector<HullSite> concave_hull(std::span<const HullSite> sites, double alpha);

}  // namespace dynlo
