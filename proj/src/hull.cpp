#include "dynlo/hull.hpp"

#include <algorithm>
#include <tuple>

namespace dynlo {
namespace {

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

bool lex_less(const HullSite& a, const HullSite& b) {
  return std::tie(a.position.x(), a.position.y(), a.id) < std::tie(b.position.x(), b.position.y(), b.id);
}

std::vector<HullSite> unique_sites(std::span<const HullSite> sites) {
  std::vector<HullSite> sorted(sites.begin(), sites.end());
  std::sort(sorted.begin(), sorted.end(), lex_less);
  std::vector<HullSite> out;
  for (const auto& s : sorted) {
    if (!out.empty() && out.back().position == s.position) continue;
    out.push_back(s);
  }
  return out;
}

class ConcaveRefiner {
 public:
  ConcaveRefiner(std::vector<HullSite> pool, double alpha) : pool_(std::move(pool)), used_(pool_.size(), false), alpha_(alpha) {}

  void mark_used(std::uint64_t id) {
    for (std::size_t i = 0; i < pool_.size(); ++i) {
      if (pool_[i].id == id) used_[i] = true;
    }
  }

  // Appends a and every vertex inserted between a and b.
  void refine(const HullSite& a, const HullSite& b, std::vector<HullSite>& out) {
    const double length = (b.position - a.position).norm();
    if (length <= alpha_) {
      out.push_back(a);
      return;
    }
    std::size_t best = pool_.size();
    double best_cost = length;
    for (std::size_t i = 0; i < pool_.size(); ++i) {
      if (used_[i]) continue;
      const HullSite& p = pool_[i];
      if (cross(a.position, b.position, p.position) < 0.0) continue;
      const double cost = std::max((p.position - a.position).norm(), (b.position - p.position).norm());
      if (cost < best_cost || (cost == best_cost && best < pool_.size() && p.id < pool_[best].id)) {
        best = i;
        best_cost = cost;
      }
    }
    if (best == pool_.size()) {
      out.push_back(a);
      return;
    }
    used_[best] = true;
    const HullSite p = pool_[best];
    refine(a, p, out);
    refine(p, b, out);
  }

 private:
  std::vector<HullSite> pool_;
  std::vector<bool> used_;
  double alpha_;
};

}  // namespace

std::vector<HullSite> convex_hull(std::span<const HullSite> sites) {
  if (sites.size() < 3) return {sites.begin(), sites.end()};
  const std::vector<HullSite> pts = unique_sites(sites);
  if (pts.size() < 3) return pts;

  std::vector<HullSite> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2].position, hull[k - 1].position, p.position) <= 0.0) --k;
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = pts.size() - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2].position, hull[k - 1].position, pts[i].position) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

std::vector<HullSite> concave_hull(std::span<const HullSite> sites, double alpha) {
  const std::vector<HullSite> hull = convex_hull(sites);
  if (sites.size() < 3 || hull.size() < 2) return hull;

  ConcaveRefiner refiner(unique_sites(sites), alpha);
  for (const auto& v : hull) refiner.mark_used(v.id);
  std::vector<HullSite> out;
  for (std::size_t i = 0; i < hull.size(); ++i) refiner.refine(hull[i], hull[(i + 1) % hull.size()], out);
  return out;
}

}  // namespace dynlo
