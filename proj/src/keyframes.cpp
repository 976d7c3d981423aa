#include "dynlo/keyframes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace dynlo {

double median_range(const PointCloud& cloud) {
  if (cloud.empty()) throw std::invalid_argument("spaciousness needs a non-empty cloud");
  std::vector<double> ranges(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) ranges[i] = cloud.points[i].norm();
  const auto mid = ranges.begin() + static_cast<std::ptrdiff_t>(ranges.size() / 2);
  std::nth_element(ranges.begin(), mid, ranges.end());
  return *mid;
}

double compute_spaciousness(const PointCloud& cloud, double prev) {
  return 0.95 * prev + 0.05 * median_range(cloud);
}

KeyframeThreshold keyframe_threshold(double spaciousness) {
  double distance = 0.5;
  if (spaciousness > 20.0) {
    distance = 10.0;
  } else if (spaciousness > 10.0) {
    distance = 5.0;
  } else if (spaciousness > 5.0) {
    distance = 1.0;
  }
  return {distance, 30.0};
}

std::size_t KeyframeDB::CellHash::operator()(const CellKey& k) const noexcept {
  // large primes spatial hash
  return static_cast<std::size_t>((k[0] * 73856093) ^ (k[1] * 19349663) ^ (k[2] * 83492791));
}

KeyframeDB::KeyframeDB(double cell_size) : cell_size_(cell_size) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("keyframe cell size must be positive");
}

std::vector<KeyframeId> KeyframeDB::ids() const {
  std::vector<KeyframeId> out;
  out.reserve(by_id_.size());
  for (const auto& [id, kf] : by_id_) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

KeyframeDB::CellKey KeyframeDB::cell_of(const Eigen::Vector3d& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_size_))};
}

KeyframeId KeyframeDB::insert(const Pose& pose, PointCloud cloud) {
  if (cloud.empty()) throw std::invalid_argument("keyframe cloud must be non-empty");
  const KeyframeId id = next_id_++;
  const CellKey cell = cell_of(pose.translation);
  if (by_id_.empty()) {
    min_cell_ = max_cell_ = cell;
  } else {
    for (int a = 0; a < 3; ++a) {
      min_cell_[a] = std::min(min_cell_[a], cell[a]);
      max_cell_[a] = std::max(max_cell_[a], cell[a]);
    }
  }
  by_id_.emplace(id, Keyframe{id, pose, std::move(cloud)});
  cells_[cell].push_back(id);
  cached_ids_.clear();
  cached_target_.reset();
  return id;
}

bool KeyframeDB::maybe_insert(const Pose& pose, const PointCloud& cloud) {
  if (by_id_.empty()) {
    insert(pose, cloud);
    return true;
  }
  const KeyframeId nearest = query_nearest(pose.translation, 1).front();
  const Pose& kf = by_id_.at(nearest).pose;
  const double distance = (kf.translation - pose.translation).norm();
  const double angle = rad2deg(rotation_angle(kf.rotation.transpose() * pose.rotation));
  const KeyframeThreshold threshold = keyframe_threshold(spaciousness_);
  if (distance > threshold.distance || angle > threshold.rotation_deg) {
    insert(pose, cloud);
    return true;
  }
  return false;
}

std::vector<KeyframeId> KeyframeDB::query_nearest(const Eigen::Vector3d& position, std::size_t k) const {
  if (k == 0) throw std::invalid_argument("query_nearest needs K >= 1");
  if (by_id_.empty()) return {};
  const CellKey center = cell_of(position);

  std::vector<std::pair<double, KeyframeId>> found;
  const auto visit = [&](const CellKey& cell) {
    const auto it = cells_.find(cell);
    if (it == cells_.end()) return;
    for (KeyframeId id : it->second) {
      found.emplace_back((by_id_.at(id).pose.translation - position).norm(), id);
    }
  };

  std::int64_t max_ring = 0;
  for (int a = 0; a < 3; ++a) {
    max_ring = std::max({max_ring, std::abs(center[a] - min_cell_[a]), std::abs(max_cell_[a] - center[a])});
  }

  for (std::int64_t r = 0; r <= max_ring; ++r) {
    const std::int64_t x0 = std::max(center[0] - r, min_cell_[0]);
    const std::int64_t x1 = std::min(center[0] + r, max_cell_[0]);
    const std::int64_t y0 = std::max(center[1] - r, min_cell_[1]);
    const std::int64_t y1 = std::min(center[1] + r, max_cell_[1]);
    for (std::int64_t x = x0; x <= x1; ++x) {
      for (std::int64_t y = y0; y <= y1; ++y) {
        const bool on_shell = std::abs(x - center[0]) == r || std::abs(y - center[1]) == r;
        if (on_shell) {
          const std::int64_t z0 = std::max(center[2] - r, min_cell_[2]);
          const std::int64_t z1 = std::min(center[2] + r, max_cell_[2]);
          for (std::int64_t z = z0; z <= z1; ++z) visit({x, y, z});
        } else {
          if (center[2] - r >= min_cell_[2]) visit({x, y, center[2] - r});
          if (r > 0 && center[2] + r <= max_cell_[2]) visit({x, y, center[2] + r});
        }
      }
    }
    if (found.size() >= k) {
      std::nth_element(found.begin(), found.begin() + static_cast<std::ptrdiff_t>(k - 1), found.end());
      // every site in ring r + 1 is at least r cells away
      if (found[k - 1].first < static_cast<double>(r) * cell_size_) break;
    }
  }

  std::sort(found.begin(), found.end());
  if (found.size() > k) found.resize(k);
  std::vector<KeyframeId> out;
  out.reserve(found.size());
  for (const auto& [d, id] : found) out.push_back(id);
  return out;
}

std::vector<HullSite> KeyframeDB::hull_sites() const {
  std::vector<HullSite> sites;
  sites.reserve(by_id_.size());
  for (KeyframeId id : ids()) sites.push_back({by_id_.at(id).pose.translation.head<2>(), id});
  return sites;
}

namespace {

std::vector<KeyframeId> sorted_ids(const std::vector<HullSite>& sites) {
  std::vector<KeyframeId> out;
  out.reserve(sites.size());
  for (const auto& s : sites) out.push_back(s.id);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<KeyframeId> KeyframeDB::convex_hull_ids() const { return sorted_ids(convex_hull(hull_sites())); }

std::vector<KeyframeId> KeyframeDB::concave_hull_ids(double alpha) const {
  return sorted_ids(concave_hull(hull_sites(), alpha));
}

std::vector<KeyframeId> KeyframeDB::nearest_among(const std::vector<KeyframeId>& candidates,
                                                  const Eigen::Vector3d& position, std::size_t count) const {
  std::vector<std::pair<double, KeyframeId>> ranked;
  ranked.reserve(candidates.size());
  for (KeyframeId id : candidates) ranked.emplace_back((by_id_.at(id).pose.translation - position).norm(), id);
  std::sort(ranked.begin(), ranked.end());
  std::vector<KeyframeId> out;
  for (std::size_t i = 0; i < std::min(count, ranked.size()); ++i) out.push_back(ranked[i].second);
  return out;
}

std::vector<KeyframeId> KeyframeDB::select_submap_ids(const Pose& pose, std::size_t k, std::size_t l,
                                                      std::size_t j, double alpha) const {
  if (by_id_.empty()) throw std::invalid_argument("submap selection needs a non-empty keyframe database");
  const Eigen::Vector3d& position = pose.translation;
  std::vector<KeyframeId> ids;
  if (k > 0) ids = query_nearest(position, k);
  if (l > 0) {
    const auto hull = nearest_among(convex_hull_ids(), position, l);
    ids.insert(ids.end(), hull.begin(), hull.end());
  }
  if (j > 0) {
    const auto concave = nearest_among(concave_hull_ids(alpha), position, j);
    ids.insert(ids.end(), concave.begin(), concave.end());
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

PointCloud KeyframeDB::assemble_submap(const std::vector<KeyframeId>& ids) const {
  PointCloud submap;
  std::size_t total = 0;
  for (KeyframeId id : ids) total += by_id_.at(id).cloud.size();
  submap.reserve(total, true, false);
  for (KeyframeId id : ids) {
    const Keyframe& kf = by_id_.at(id);
    PointCloud world = se3_apply(kf.pose, kf.cloud);
    world.labels.clear();
    submap.append(world);
  }
  return submap;
}

SubmapSelection KeyframeDB::select_submap(const Pose& pose, std::size_t k, std::size_t l, std::size_t j,
                                          double alpha) {
  SubmapSelection out;
  out.ids = select_submap_ids(pose, k, l, j, alpha);
  if (cached_target_ && out.ids == cached_ids_) {
    out.target = cached_target_;
    return out;
  }
  cached_ids_ = out.ids;
  cached_target_ = std::make_shared<const GicpTarget>(assemble_submap(out.ids));
  out.target = cached_target_;
  out.rebuilt = true;
  return out;
}

bool KeyframeDB::index_consistent() const {
  std::size_t indexed = 0;
  for (const auto& [cell, ids] : cells_) {
    for (KeyframeId id : ids) {
      const auto it = by_id_.find(id);
      if (it == by_id_.end() || cell_of(it->second.pose.translation) != cell) return false;
      ++indexed;
    }
  }
  return indexed == by_id_.size();
}

}  // namespace dynlo
