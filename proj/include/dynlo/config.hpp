#pragma once

#include "dynlo/detections.hpp"
#include "dynlo/gicp.hpp"
#include "dynlo/mot.hpp"
#include "dynlo/odometry.hpp"
#include "dynlo/preprocess.hpp"

#include <filesystem>
#include <istream>
#include <set>
#include <string>

namespace dynlo {

struct SubmapParams {
  std::size_t k = 10;  // nearest keyframes
  std::size_t l = 10;  // nearest convex-hull keyframes
  std::size_t j = 10;  // nearest concave-hull keyframes
  // <= 0 follows the adaptive keyframe distance threshold
  double concave_alpha = 0.0;
  double cell_size = 5.0;
};

struct PipelineConfig {
  PreprocessParams preprocess;
  double min_score = kDefaultMinScore;
  std::set<ObjectClass> classes = default_tracked_classes();
  UkfParams tracker;
  TrackerKind tracker_kind = TrackerKind::kUkf;
  double removal_margin = kDefaultBoxMargin;
  GicpParams gicp;
  ConstraintParams constraint;
  SubmapParams submap;
  double scan_period = 0.1;
  bool enable_removal = true;
  bool enable_constraint = true;

  void validate() const;
};

/// `key value...` lines, `#` comments. Unknown keys and malformed values throw
/// std::runtime_error naming the line.
PipelineConfig parse_config(std::istream& in);
PipelineConfig load_config(const std::filesystem::path& path);

/// Every key with its current value; parse_config(serialize_config(c)) == c.
std::string serialize_config(const PipelineConfig& config);

}  // namespace dynlo
