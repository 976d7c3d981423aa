#pragma once

#include "dynlo/detections.hpp"
#include "dynlo/geometry.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace dynlo {

constexpr int kStateDim = 8;
constexpr int kObsDim = 7;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using StateMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;
using ObsVector = Eigen::Matrix<double, kObsDim, 1>;
using ObsMatrix = Eigen::Matrix<double, kObsDim, kObsDim>;

// Layout of the object state [x, y, z, yaw, v, l, w, h].
enum StateIndex : int { kX = 0, kY, kZ, kYaw, kSpeed, kLength, kWidth, kHeight };
// Observation [x, y, z, yaw, l, w, h]: the yaw sits at index 3 in both vectors.
constexpr int kObsYaw = 3;

struct UkfParams {
  double alpha = 1e-3;
  double beta = 2.0;
  double kappa = 0.0;
  StateMatrix process_noise = default_process_noise();  // per second
  ObsMatrix measurement_noise = default_measurement_noise();
  double initial_velocity_variance = 100.0;
  double dynamic_speed_threshold = 1.0;
  double gate_distance = 2.0;
  int age_max = 3;
  int min_hits_dynamic = 3;  // updates before a track may be flagged dynamic

  static StateMatrix default_process_noise();
  static ObsMatrix default_measurement_noise();
  void validate() const;
};

struct TrackState {
  StateVector mean = StateVector::Zero();
  StateMatrix covariance = StateMatrix::Identity();
};

struct Track {
  std::uint64_t id = 0;
  TrackState state;
  int age_since_update = 0;
  int hits = 0;
  bool dynamic = false;
  ObjectClass object_class = ObjectClass::kCar;
  double last_observed_z = 0.0;
};

struct SigmaPoints {
  Eigen::MatrixXd points;  // n x (2n + 1), column 0 is the mean
  Eigen::VectorXd mean_weights;
  Eigen::VectorXd cov_weights;
};

/// Scaled symmetric sigma set. Throws "covariance not decomposable" when the
/// covariance has no Cholesky factor even after 1e-9 I jitter.
SigmaPoints sigma_points(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, double alpha, double beta,
                         double kappa);
inline SigmaPoints sigma_points(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, const UkfParams& p) {
  return sigma_points(mean, cov, p.alpha, p.beta, p.kappa);
}

/// Constant speed along the heading.
StateVector motion_model(const StateVector& state, double dt);
ObsVector observation_model(const StateVector& state);

ObsVector observation_from_box(const DetectionBox& box);
DetectionBox box_from_state(const StateVector& state, ObjectClass object_class = ObjectClass::kCar,
                            double score = 1.0);

/// Track spawned from a detection: zero speed, large speed variance.
Track spawn_track(std::uint64_t id, const DetectionBox& box, const UkfParams& params);

bool classify_dynamic(const StateVector& state, double threshold);

/// Wraps a yaw residual into (-pi/2, pi/2] to absorb the detector's heading ambiguity.
double wrap_half_turn(double angle);

Track ukf_predict(Track track, double dt, const UkfParams& params);
Track ukf_update(Track track, const DetectionBox& detection, const UkfParams& params);

// First-order variant used for ablation runs.
Track ekf_predict(Track track, double dt, const UkfParams& params);
Track ekf_update(Track track, const DetectionBox& detection, const UkfParams& params);

StateMatrix motion_jacobian(const StateVector& state, double dt);

struct Association {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (track position, detection index)
  std::vector<std::size_t> unmatched_tracks;
  std::vector<std::size_t> unmatched_detections;
};

/// Greedy globally-nearest assignment on 3D center distance within `gate`.
/// Ties break by (track id, detection index).
Association associate_nn(const std::vector<Track>& tracks, const std::vector<DetectionBox>& detections,
                         double gate);

enum class TrackerKind { kUkf, kEkf };

struct TrackerStep {
  std::vector<DetectionBox> dynamic_boxes;
  // mean z change of tracks matched in this and the previous scan
  std::optional<double> mean_box_dz;
};

class MultiObjectTracker {
 public:
  explicit MultiObjectTracker(UkfParams params = {}, TrackerKind kind = TrackerKind::kUkf);

  TrackerStep step(const DetectionFrame& frame, double dt);

  const std::vector<Track>& tracks() const { return tracks_; }
  const UkfParams& params() const { return params_; }
  TrackerKind kind() const { return kind_; }

 private:
  UkfParams params_;
  TrackerKind kind_;
  std::vector<Track> tracks_;  // ascending id
  std::uint64_t next_id_ = 0;
};

}  // namespace dynlo
