#pragma once

#include "dynlo/config.hpp"
#include "dynlo/detections.hpp"
#include "dynlo/keyframes.hpp"
#include "dynlo/metrics.hpp"
#include "dynlo/mot.hpp"

#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <vector>

namespace dynlo {

struct ScanInput {
  std::size_t scan_index = 0;
  double timestamp = 0.0;
  PointCloud cloud;  // body frame; labels optional
  DetectionFrame detections;
};

class ScanSource {
 public:
  virtual ~ScanSource() = default;
  /// nullopt once exhausted.
  virtual std::optional<ScanInput> next() = 0;
};

/// Scans from `scans/NNNNNN.bin`, detections from the same index in the
/// detection directory (missing file means no detections), labels optional.
class DirectorySource : public ScanSource {
 public:
  DirectorySource(const std::filesystem::path& scans, const std::filesystem::path& detections, double scan_period,
                  std::optional<std::filesystem::path> labels = std::nullopt);

  std::optional<ScanInput> next() override;
  std::size_t size() const { return scans_.size(); }

 private:
  std::vector<std::pair<std::size_t, std::filesystem::path>> scans_;
  std::map<std::size_t, std::filesystem::path> detections_;
  std::optional<std::filesystem::path> labels_dir_;
  double scan_period_;
  std::size_t cursor_ = 0;
};

/// In-memory source over simulator-style vectors; copies one scan per call.
class VectorSource : public ScanSource {
 public:
  VectorSource(const std::vector<PointCloud>& scans, const std::vector<DetectionFrame>& detections,
               double scan_period);

  std::optional<ScanInput> next() override;

 private:
  const std::vector<PointCloud>& scans_;
  const std::vector<DetectionFrame>& detections_;
  double scan_period_;
  std::size_t cursor_ = 0;
};

struct ScanStats {
  std::size_t scan_index = 0;
  double preprocess_ms = 0.0;
  double tracker_ms = 0.0;
  double odometry_ms = 0.0;
  std::size_t raw_points = 0;
  std::size_t preprocessed_points = 0;
  std::size_t removed_points = 0;
  std::size_t detections = 0;
  std::size_t dynamic_tracks = 0;
  bool s2s_failed = false;
  bool s2m_failed = false;
  bool s2s_converged = true;
  bool s2m_converged = true;
  bool ground_constraint = false;
  bool z_constraint = false;
  bool keyframe = false;
  std::size_t submap_keyframes = 0;
};

struct PipelineResult {
  Trajectory trajectory;
  PointCloud map;  // world frame, labels kept when the input was labeled
  std::vector<ScanStats> stats;
  // over the preprocessed points of keyframe scans; zero without labels
  MapProvenance provenance;
  std::size_t solver_failures = 0;
};

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config, Execution exec = Execution::kParallel);

  ScanStats process(const ScanInput& input);

  const Trajectory& trajectory() const { return trajectory_; }
  const KeyframeDB& keyframes() const { return db_; }
  const MultiObjectTracker& tracker() const { return tracker_; }
  const MapProvenance& provenance() const { return provenance_; }
  std::size_t solver_failures() const { return solver_failures_; }

  /// Union of the keyframe clouds in the world frame, ascending keyframe id.
  PointCloud build_map() const;

 private:
  struct WindowEntry {
    Pose world;
    std::vector<DetectionBox> boxes;  // body frame of that scan
  };

  PipelineConfig config_;
  Execution exec_;
  MultiObjectTracker tracker_;
  KeyframeDB db_;
  Trajectory trajectory_;
  MapProvenance provenance_;
  std::size_t solver_failures_ = 0;

  std::optional<GicpTarget> previous_;
  Pose last_delta_;
  std::deque<WindowEntry> window_;
};

using ScanCallback = std::function<void(const Pipeline&, const ScanStats&)>;

PipelineResult run_pipeline(ScanSource& source, const PipelineConfig& config,
                            Execution exec = Execution::kParallel, const ScanCallback& on_scan = {});

/// Mean stage times over all scans, in ms.
struct StageTimes {
  double preprocess_ms = 0.0;
  double tracker_ms = 0.0;
  double odometry_ms = 0.0;
  double total_ms() const { return preprocess_ms + tracker_ms + odometry_ms; }
};

StageTimes mean_stage_times(const std::vector<ScanStats>& stats);

/// One header line plus one whitespace-separated line per scan.
void write_stats(const std::filesystem::path& path, const std::vector<ScanStats>& stats);

}  // namespace dynlo
