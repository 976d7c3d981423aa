#pragma once

#include "dynlo/geometry.hpp"
#include "dynlo/gicp.hpp"
#include "dynlo/hull.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

namespace dynlo {

using KeyframeId = std::uint64_t;

struct Keyframe {
  KeyframeId id = 0;
  Pose pose;         // world
  PointCloud cloud;  // body frame at capture, with covariances
};

/// Exponentially smoothed median point range: 0.95 prev + 0.05 median.
/// For an even count the median is the upper of the two middle ranges.
double compute_spaciousness(const PointCloud& cloud, double prev);

/// Median range of the cloud as used by compute_spaciousness.
double median_range(const PointCloud& cloud);

struct KeyframeThreshold {
  double distance;      // m
  double rotation_deg;  // deg
};

KeyframeThreshold keyframe_threshold(double spaciousness);

struct SubmapSelection {
  std::vector<KeyframeId> ids;  // ascending
  std::shared_ptr<const GicpTarget> target;
  bool rebuilt = false;
};

/// Keyframes keyed by id plus a spatial hash over their translations.
class KeyframeDB {
 public:
  using CellKey = std::array<std::int64_t, 3>;

  struct CellHash {
    std::size_t operator()(const CellKey& k) const noexcept;
  };

  explicit KeyframeDB(double cell_size = 5.0);

  std::size_t size() const { return by_id_.size(); }
  bool empty() const { return by_id_.empty(); }
  double cell_size() const { return cell_size_; }

  double spaciousness() const { return spaciousness_; }
  void set_spaciousness(double s) { spaciousness_ = s; }

  const Keyframe& at(KeyframeId id) const { return by_id_.at(id); }
  const std::unordered_map<KeyframeId, Keyframe>& keyframes() const { return by_id_; }
  const std::unordered_map<CellKey, std::vector<KeyframeId>, CellHash>& spatial_index() const { return cells_; }
  std::vector<KeyframeId> ids() const;  // ascending

  CellKey cell_of(const Eigen::Vector3d& position) const;

  /// Unconditional insert; returns the new id.
  KeyframeId insert(const Pose& pose, PointCloud cloud);

  /// Inserts when the DB is empty or the pose is farther than the adaptive
  /// distance threshold, or rotated more than the rotation threshold, from its
  /// nearest keyframe.
  bool maybe_insert(const Pose& pose, const PointCloud& cloud);

  /// K nearest keyframe translations by expanding ring search over the hash.
  std::vector<KeyframeId> query_nearest(const Eigen::Vector3d& position, std::size_t k) const;

  std::vector<KeyframeId> convex_hull_ids() const;
  std::vector<KeyframeId> concave_hull_ids(double alpha) const;

  /// Deduplicated union of the K nearest, the L hull vertices nearest and the
  /// J concave-boundary vertices nearest to the pose, in ascending id order.
  std::vector<KeyframeId> select_submap_ids(const Pose& pose, std::size_t k, std::size_t l, std::size_t j,
                                            double alpha) const;

  /// World-frame concatenation of the selected clouds with rotated covariances.
  PointCloud assemble_submap(const std::vector<KeyframeId>& ids) const;

  /// Cached per id set; the cache is dropped on insert.
  SubmapSelection select_submap(const Pose& pose, std::size_t k, std::size_t l, std::size_t j, double alpha);

  bool index_consistent() const;

 private:
  std::vector<HullSite> hull_sites() const;
  std::vector<KeyframeId> nearest_among(const std::vector<KeyframeId>& candidates, const Eigen::Vector3d& position,
                                        std::size_t count) const;

  double cell_size_;
  double spaciousness_ = 0.0;
  KeyframeId next_id_ = 0;
  std::unordered_map<KeyframeId, Keyframe> by_id_;
  std::unordered_map<CellKey, std::vector<KeyframeId>, CellHash> cells_;
  CellKey min_cell_{};
  CellKey max_cell_{};

  std::vector<KeyframeId> cached_ids_;
  std::shared_ptr<const GicpTarget> cached_target_;
};

}  // namespace dynlo
