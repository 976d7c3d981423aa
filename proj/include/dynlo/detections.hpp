#pragma once

#include "dynlo/geometry.hpp"

#include <filesystem>
#include <istream>
#include <set>
#include <string>
#include <vector>

namespace dynlo {

struct DetectionFrame {
  std::size_t scan_index = 0;
  std::vector<DetectionBox> boxes;
};

/// Parses `class score cx cy cz l w h yaw` lines; `#` starts a comment line.
/// Throws std::runtime_error naming the line on malformed input.
DetectionFrame parse_detection_frame(std::istream& in, std::size_t scan_index = 0);
DetectionFrame load_detection_frame(const std::filesystem::path& path);

/// Scan index from a file stem like `000042.txt`, or the given fallback.
std::size_t scan_index_from_path(const std::filesystem::path& path, std::size_t fallback = 0);

std::string serialize_detection_frame(const DetectionFrame& frame);
void save_detection_frame(const std::filesystem::path& path, const DetectionFrame& frame);

inline const std::set<ObjectClass>& default_tracked_classes() {
  static const std::set<ObjectClass> classes{ObjectClass::kCar, ObjectClass::kCyclist};
  return classes;
}

constexpr double kDefaultMinScore = 0.75;

/// Keeps boxes with score >= min_score whose class is in `classes`.
DetectionFrame filter_detections(const DetectionFrame& frame, double min_score = kDefaultMinScore,
                                 const std::set<ObjectClass>& classes = default_tracked_classes());

}  // namespace dynlo
