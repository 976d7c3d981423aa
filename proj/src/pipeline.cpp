#include "dynlo/pipeline.hpp"

#include "dynlo/io.hpp"
#include "dynlo/odometry.hpp"
#include "dynlo/preprocess.hpp"
#include "dynlo/removal.hpp"

#include <chrono>
#include <fstream>
#include <stdexcept>

namespace dynlo {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

DirectorySource::DirectorySource(const std::filesystem::path& scans, const std::filesystem::path& detections,
                                 double scan_period, std::optional<std::filesystem::path> labels)
    : labels_dir_(std::move(labels)), scan_period_(scan_period) {
  for (const auto& [index, path] : io::list_indexed_files(scans, ".bin")) scans_.emplace_back(index, path);
  if (scans_.empty()) throw std::runtime_error("no scan files (NNNNNN.bin) in " + scans.string());
  detections_ = io::list_indexed_files(detections, ".txt");
  if (labels_dir_ && !std::filesystem::is_directory(*labels_dir_)) {
    throw std::runtime_error("not a directory: " + labels_dir_->string());
  }
}

std::optional<ScanInput> DirectorySource::next() {
  if (cursor_ >= scans_.size()) return std::nullopt;
  const auto& [index, path] = scans_[cursor_++];
  ScanInput input;
  input.scan_index = index;
  input.timestamp = static_cast<double>(index) * scan_period_;
  input.cloud = io::read_scan_bin(path);
  const auto det = detections_.find(index);
  if (det != detections_.end()) input.detections = load_detection_frame(det->second);
  input.detections.scan_index = index;
  if (labels_dir_) {
    const auto label_path = *labels_dir_ / io::indexed_name(index, ".txt");
    input.cloud.labels = io::read_labels(label_path);
    if (input.cloud.labels.size() != input.cloud.size()) {
      throw std::runtime_error(label_path.string() + ": " + std::to_string(input.cloud.labels.size()) +
                               " labels for " + std::to_string(input.cloud.size()) + " points");
    }
  }
  return input;
}

VectorSource::VectorSource(const std::vector<PointCloud>& scans, const std::vector<DetectionFrame>& detections,
                           double scan_period)
    : scans_(scans), detections_(detections), scan_period_(scan_period) {
  if (scans.size() != detections.size()) throw std::invalid_argument("scan and detection counts differ");
}

std::optional<ScanInput> VectorSource::next() {
  if (cursor_ >= scans_.size()) return std::nullopt;
  ScanInput input;
  input.scan_index = cursor_;
  input.timestamp = static_cast<double>(cursor_) * scan_period_;
  input.cloud = scans_[cursor_];
  input.detections = detections_[cursor_];
  input.detections.scan_index = cursor_;
  ++cursor_;
  return input;
}

Pipeline::Pipeline(PipelineConfig config, Execution exec)
    : config_(std::move(config)),
      exec_(exec),
      tracker_(config_.tracker, config_.tracker_kind),
      db_(config_.submap.cell_size) {
  config_.validate();
}

ScanStats Pipeline::process(const ScanInput& input) {
  if (!trajectory_.empty() && input.scan_index <= trajectory_.back().scan_index) {
    throw std::invalid_argument("scan indices must be strictly increasing");
  }
  ScanStats stats;
  stats.scan_index = input.scan_index;
  stats.raw_points = input.cloud.size();

  auto t0 = Clock::now();
  const PointCloud cropped = crop_self_returns(input.cloud, config_.preprocess.self_crop_half_extent);
  const PointCloud scan = voxel_downsample(cropped, config_.preprocess.voxel_leaf);
  const DetectionFrame detections = filter_detections(input.detections, config_.min_score, config_.classes);
  stats.preprocessed_points = scan.size();
  stats.detections = detections.boxes.size();
  stats.preprocess_ms = elapsed_ms(t0);

  // The tracker runs in the odometry world frame so that the ego motion does
  // not leak into object velocities; detections go through the constant
  // velocity prediction of the current pose.
  t0 = Clock::now();
  const bool first = trajectory_.empty();
  const Pose prev_world = first ? Pose::identity() : trajectory_.back().pose;
  const Pose predicted = prev_world * last_delta_;
  const double dt = first ? config_.scan_period : input.timestamp - trajectory_.back().timestamp;

  DetectionFrame world_frame;
  world_frame.scan_index = detections.scan_index;
  for (const auto& box : detections.boxes) world_frame.boxes.push_back(transform_box(predicted, box));
  const TrackerStep step = tracker_.step(world_frame, dt);
  stats.dynamic_tracks = step.dynamic_boxes.size();

  PointCloud static_scan;
  std::vector<std::uint8_t> kept(scan.size(), 1);
  if (config_.enable_removal) {
    const Pose to_body = predicted.inverse();
    std::vector<DetectionBox> body_boxes;
    body_boxes.reserve(step.dynamic_boxes.size());
    for (const auto& box : step.dynamic_boxes) body_boxes.push_back(transform_box(to_body, box));
    RemovalResult removal = remove_dynamic_points(scan, body_boxes, config_.removal_margin, exec_);
    for (std::size_t i : removal.removed_indices) kept[i] = 0;
    stats.removed_points = removal.removed_indices.size();
    static_scan = std::move(removal.static_cloud);
  } else {
    static_scan = scan;
  }
  stats.tracker_ms = elapsed_ms(t0);

  t0 = Clock::now();
  std::optional<PointCloud> source;
  try {
    source = estimate_point_covariances(static_scan, config_.preprocess.covariance_knn,
                                        config_.preprocess.plane_epsilon, exec_);
  } catch (const std::exception&) {
    source.reset();
  }

  Pose world = prev_world;
  if (!source) {
    stats.s2s_failed = true;
    stats.s2m_failed = true;
  } else if (!first) {
    Pose relative = Pose::identity();
    try {
      const GicpResult s2s = scan_to_scan(*source, *previous_, config_.gicp, Pose::identity(), exec_);
      relative = s2s.pose;
      stats.s2s_converged = s2s.converged;
    } catch (const std::exception&) {
      stats.s2s_failed = true;
    }
    const Pose propagated = propagate_world(prev_world, relative);

    double alpha = config_.submap.concave_alpha;
    if (alpha <= 0.0) alpha = keyframe_threshold(db_.spaciousness()).distance;
    const SubmapSelection submap =
        db_.select_submap(propagated, config_.submap.k, config_.submap.l, config_.submap.j, alpha);
    stats.submap_keyframes = submap.ids.size();
    world = propagated;
    try {
      const GicpResult s2m = scan_to_map(*source, *submap.target, propagated, config_.gicp, exec_);
      world = s2m.pose;
      stats.s2m_converged = s2m.converged;
    } catch (const std::exception&) {
      stats.s2m_failed = true;
    }

    if (config_.enable_constraint) {
      std::vector<DetectionBox> ground_boxes = detections.boxes;
      const Pose to_body = world.inverse();
      const std::size_t past = static_cast<std::size_t>(std::max(0, config_.constraint.window_scans - 1));
      const std::size_t begin = window_.size() > past ? window_.size() - past : 0;
      for (std::size_t w = begin; w < window_.size(); ++w) {
        const Pose rel = to_body * window_[w].world;
        for (const auto& box : window_[w].boxes) ground_boxes.push_back(transform_box(rel, box));
      }
      const std::optional<GroundFit> ground = fit_ground_from_boxes(ground_boxes, config_.constraint);
      stats.ground_constraint = ground.has_value();
      stats.z_constraint =
          step.mean_box_dz && std::abs(*step.mean_box_dz) < config_.constraint.z_change_threshold;
      world = apply_consistency_constraint(world, prev_world, ground, step.mean_box_dz, config_.constraint);
    }
  }
  if (stats.s2s_failed || stats.s2m_failed) ++solver_failures_;

  if (source) {
    if (first) {
      db_.set_spaciousness(median_range(scan));
    } else {
      db_.set_spaciousness(compute_spaciousness(scan, db_.spaciousness()));
    }
    stats.keyframe = db_.maybe_insert(world, *source);
    if (stats.keyframe && scan.has_labels()) provenance_ += count_provenance(scan.labels, kept);
    previous_.reset();
    previous_.emplace(std::move(*source));
  }

  window_.push_back({world, detections.boxes});
  while (window_.size() > static_cast<std::size_t>(std::max(1, config_.constraint.window_scans))) {
    window_.pop_front();
  }
  last_delta_ = first ? Pose::identity() : prev_world.inverse() * world;
  trajectory_.push_back({input.scan_index, input.timestamp, world});
  stats.odometry_ms = elapsed_ms(t0);
  return stats;
}

PointCloud Pipeline::build_map() const {
  PointCloud map;
  for (KeyframeId id : db_.ids()) {
    const Keyframe& kf = db_.at(id);
    map.points.reserve(map.points.size() + kf.cloud.size());
    for (const auto& p : kf.cloud.points) map.points.push_back(kf.pose * p);
    if (kf.cloud.has_labels()) map.labels.insert(map.labels.end(), kf.cloud.labels.begin(), kf.cloud.labels.end());
  }
  if (map.labels.size() != map.points.size()) map.labels.clear();
  return map;
}

PipelineResult run_pipeline(ScanSource& source, const PipelineConfig& config, Execution exec,
                            const ScanCallback& on_scan) {
  Pipeline pipeline(config, exec);
  PipelineResult result;
  while (auto input = source.next()) {
    result.stats.push_back(pipeline.process(*input));
    if (on_scan) on_scan(pipeline, result.stats.back());
  }
  result.trajectory = pipeline.trajectory();
  result.map = pipeline.build_map();
  result.provenance = pipeline.provenance();
  result.solver_failures = pipeline.solver_failures();
  return result;
}

StageTimes mean_stage_times(const std::vector<ScanStats>& stats) {
  StageTimes out;
  if (stats.empty()) return out;
  for (const auto& s : stats) {
    out.preprocess_ms += s.preprocess_ms;
    out.tracker_ms += s.tracker_ms;
    out.odometry_ms += s.odometry_ms;
  }
  const double n = static_cast<double>(stats.size());
  out.preprocess_ms /= n;
  out.tracker_ms /= n;
  out.odometry_ms /= n;
  return out;
}

void write_stats(const std::filesystem::path& path, const std::vector<ScanStats>& stats) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# scan preprocess_ms tracker_ms odometry_ms raw_points points removed detections dynamic_tracks "
         "s2s_failed s2m_failed s2s_converged s2m_converged ground_constraint z_constraint keyframe submap\n";
  for (const auto& s : stats) {
    out << s.scan_index << ' ' << io::format_double(s.preprocess_ms) << ' ' << io::format_double(s.tracker_ms) << ' '
        << io::format_double(s.odometry_ms) << ' ' << s.raw_points << ' ' << s.preprocessed_points << ' '
        << s.removed_points << ' ' << s.detections << ' ' << s.dynamic_tracks << ' ' << s.s2s_failed << ' '
        << s.s2m_failed << ' ' << s.s2s_converged << ' ' << s.s2m_converged << ' ' << s.ground_constraint << ' '
        << s.z_constraint << ' ' << s.keyframe << ' ' << s.submap_keyframes << '\n';
  }
  const StageTimes mean = mean_stage_times(stats);
  out << "# mean_ms preprocess " << io::format_double(mean.preprocess_ms) << " tracker "
      << io::format_double(mean.tracker_ms) << " odometry " << io::format_double(mean.odometry_ms) << '\n';
}

}  // namespace dynlo
