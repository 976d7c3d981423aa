#include "dynlo/knn.hpp"

#include <algorithm>
#include <numeric>

namespace dynlo {
namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.squared_distance < b.squared_distance ||
         (a.squared_distance == b.squared_distance && a.index < b.index);
}

// Bounded result set kept sorted by (distance, index).
class KnnCollector {
 public:
  explicit KnnCollector(std::size_t k) : k_(k) { best_.reserve(k + 1); }

  void offer(const Neighbor& n) {
    if (best_.size() == k_ && !closer(n, best_.back())) return;
    auto it = std::upper_bound(best_.begin(), best_.end(), n, closer);
    best_.insert(it, n);
    if (best_.size() > k_) best_.pop_back();
  }

  // Subtrees at squared distance > bound cannot contribute; equality may still tie.
  double bound() const {
    return best_.size() < k_ ? std::numeric_limits<double>::infinity() : best_.back().squared_distance;
  }

  std::vector<Neighbor> take() { return std::move(best_); }

 private:
  std::size_t k_;
  std::vector<Neighbor> best_;
};

class NearestCollector {
 public:
  explicit NearestCollector(double max_sq) : bound_(max_sq) {}

  void offer(const Neighbor& n) {
    if (n.squared_distance > bound_) return;
    if (!best_ || closer(n, *best_)) {
      best_ = n;
      bound_ = n.squared_distance;
    }
  }
  double bound() const { return bound_; }
  std::optional<Neighbor> take() const { return best_; }

 private:
  double bound_;
  std::optional<Neighbor> best_;
};

}  // namespace

KdTree::KdTree(std::span<const Eigen::Vector3d> points, int leaf_size) : points_(points) {
  order_.resize(points.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points.empty()) {
    nodes_.reserve(2 * points.size() / std::max(1, leaf_size) + 1);
    build(0, static_cast<std::uint32_t>(points.size()), std::max(1, leaf_size));
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end, int leaf_size) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{});
  if (end - begin <= static_cast<std::uint32_t>(leaf_size)) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }

  Eigen::Vector3d lo = points_[order_[begin]];
  Eigen::Vector3d hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = points_[a][axis];
                     const double cb = points_[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const double split = points_[order_[mid]][axis];

  const std::int32_t left = build(begin, mid, leaf_size);
  const std::int32_t right = build(mid, end, leaf_size);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

template <typename Visitor>
void KdTree::search(std::int32_t node_id, const Eigen::Vector3d& query, Visitor& visitor) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      visitor.offer(Neighbor{idx, (points_[idx] - query).squaredNorm()});
    }
    return;
  }
  // left holds coords <= split, right holds coords >= split
  const double diff = query[node.axis] - node.split;
  const std::int32_t first = diff <= 0.0 ? node.left : node.right;
  const std::int32_t second = diff <= 0.0 ? node.right : node.left;
  search(first, query, visitor);
  if (diff * diff <= visitor.bound()) search(second, query, visitor);
}

std::vector<Neighbor> KdTree::knn(const Eigen::Vector3d& query, std::size_t k) const {
  if (nodes_.empty() || k == 0) return {};
  KnnCollector collector(std::min(k, points_.size()));
  search(0, query, collector);
  return collector.take();
}

std::optional<Neighbor> KdTree::nearest(const Eigen::Vector3d& query, double max_squared_distance) const {
  if (nodes_.empty()) return std::nullopt;
  NearestCollector collector(max_squared_distance);
  search(0, query, collector);
  return collector.take();
}

std::vector<Neighbor> brute_force_knn(std::span<const Eigen::Vector3d> points,
                                      const Eigen::Vector3d& query, std::size_t k) {
  std::vector<Neighbor> all(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    all[i] = Neighbor{static_cast<std::uint32_t>(i), (points[i] - query).squaredNorm()};
  }
  std::sort(all.begin(), all.end(), closer);
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace dynlo
