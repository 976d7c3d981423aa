#include "dynlo/mot.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace dynlo {
namespace {

constexpr double kJitter = 1e-9;
constexpr double kMinDimension = 1e-3;

template <typename Matrix>
void symmetrize(Matrix& m) {
  m = (0.5 * (m + m.transpose())).eval();
}

void sanitize(StateVector& x) {
  x(kYaw) = wrap_angle(x(kYaw));
  for (int i : {kLength, kWidth, kHeight}) x(i) = std::max(x(i), kMinDimension);
}

// Weighted mean of sigma columns about column 0, with yaw differences wrapped.
template <int Rows>
Eigen::Matrix<double, Rows, 1> weighted_mean(const Eigen::Matrix<double, Rows, Eigen::Dynamic>& columns,
                                             const Eigen::VectorXd& weights, int yaw_row) {
  const Eigen::Matrix<double, Rows, 1> anchor = columns.col(0);
  Eigen::Matrix<double, Rows, 1> offset = Eigen::Matrix<double, Rows, 1>::Zero();
  for (Eigen::Index i = 1; i < columns.cols(); ++i) {
    Eigen::Matrix<double, Rows, 1> d = columns.col(i) - anchor;
    d(yaw_row) = wrap_angle(d(yaw_row));
    offset += weights(i) * d;
  }
  // sum of weights is one, so the anchor carries weight 1 - sum_{i>0} w_i = w_0
  Eigen::Matrix<double, Rows, 1> mean = anchor + offset;
  mean(yaw_row) = wrap_angle(mean(yaw_row));
  return mean;
}

template <int Rows>
Eigen::Matrix<double, Rows, Eigen::Dynamic> deviations(const Eigen::Matrix<double, Rows, Eigen::Dynamic>& columns,
                                                       const Eigen::Matrix<double, Rows, 1>& mean, int yaw_row) {
  Eigen::Matrix<double, Rows, Eigen::Dynamic> d = columns.colwise() - mean;
  for (Eigen::Index i = 0; i < d.cols(); ++i) d(yaw_row, i) = wrap_angle(d(yaw_row, i));
  return d;
}

ObsMatrix inverse_innovation(const ObsMatrix& s) {
  Eigen::LLT<ObsMatrix> llt(s);
  if (llt.info() != Eigen::Success) {
    llt.compute(s + kJitter * ObsMatrix::Identity());
    if (llt.info() != Eigen::Success) throw std::runtime_error("innovation covariance singular");
  }
  ObsMatrix inv = llt.solve(ObsMatrix::Identity());
  if (!inv.allFinite()) throw std::runtime_error("innovation covariance singular");
  return inv;
}

ObsVector innovation(const DetectionBox& detection, const ObsVector& predicted) {
  ObsVector r = observation_from_box(detection) - predicted;
  r(kObsYaw) = wrap_half_turn(r(kObsYaw));
  return r;
}

void record_update(Track& track, const DetectionBox& detection, const UkfParams& params) {
  track.age_since_update = 0;
  ++track.hits;
  // a speed estimate from fewer scans is mostly finite-differenced detector noise
  track.dynamic =
      track.hits >= params.min_hits_dynamic && classify_dynamic(track.state.mean, params.dynamic_speed_threshold);
  track.object_class = detection.object_class;
  track.last_observed_z = detection.center.z();
}

Eigen::Matrix<double, kObsDim, kStateDim> observation_jacobian() {
  Eigen::Matrix<double, kObsDim, kStateDim> h = Eigen::Matrix<double, kObsDim, kStateDim>::Zero();
  h(0, kX) = h(1, kY) = h(2, kZ) = h(3, kYaw) = 1.0;
  h(4, kLength) = h(5, kWidth) = h(6, kHeight) = 1.0;
  return h;
}

}  // namespace

StateMatrix UkfParams::default_process_noise() {
  StateVector d;
  d << 0.01, 0.01, 0.01, 0.01, 0.25, 1e-4, 1e-4, 1e-4;
  return d.asDiagonal();
}

ObsMatrix UkfParams::default_measurement_noise() {
  ObsVector d;
  d << 0.04, 0.04, 0.04, 0.01, 0.01, 0.01, 0.01;
  return d.asDiagonal();
}

void UkfParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("ukf alpha must lie in (0, 1]");
  if (!(initial_velocity_variance > 0.0) || !(dynamic_speed_threshold > 0.0) || !(gate_distance > 0.0)) {
    throw std::invalid_argument("tracker thresholds must be positive");
  }
  if (min_hits_dynamic < 1) throw std::invalid_argument("min_hits_dynamic must be at least 1");
  if (age_max < 0) throw std::invalid_argument("age_max must be non-negative");
  const auto psd = [](const auto& m) {
    if (!m.isApprox(m.transpose(), 1e-12)) return false;
    using M = std::decay_t<decltype(m)>;
    Eigen::SelfAdjointEigenSolver<M> solver(m);
    return solver.eigenvalues().minCoeff() >= -1e-12;
  };
  if (!psd(process_noise) || !psd(measurement_noise)) {
    throw std::invalid_argument("noise matrices must be symmetric positive semi-definite");
  }
}

SigmaPoints sigma_points(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, double alpha, double beta,
                         double kappa) {
  const auto n = mean.size();
  const double nd = static_cast<double>(n);
  const double lambda = alpha * alpha * (nd + kappa) - nd;
  const double scale = nd + lambda;

  Eigen::LLT<Eigen::MatrixXd> llt(scale * cov);
  if (llt.info() != Eigen::Success) {
    llt.compute(scale * (cov + kJitter * Eigen::MatrixXd::Identity(n, n)));
    if (llt.info() != Eigen::Success) throw std::runtime_error("covariance not decomposable");
  }
  const Eigen::MatrixXd root = llt.matrixL();

  SigmaPoints s;
  s.points.resize(n, 2 * n + 1);
  s.points.col(0) = mean;
  for (Eigen::Index i = 0; i < n; ++i) {
    s.points.col(1 + i) = mean + root.col(i);
    s.points.col(1 + n + i) = mean - root.col(i);
  }
  s.mean_weights = Eigen::VectorXd::Constant(2 * n + 1, 0.5 / scale);
  s.cov_weights = s.mean_weights;
  s.mean_weights(0) = lambda / scale;
  s.cov_weights(0) = lambda / scale + (1.0 - alpha * alpha + beta);
  return s;
}

StateVector motion_model(const StateVector& state, double dt) {
  StateVector out = state;
  out(kX) += state(kSpeed) * std::cos(state(kYaw)) * dt;
  out(kY) += state(kSpeed) * std::sin(state(kYaw)) * dt;
  out(kYaw) = wrap_angle(state(kYaw));
  return out;
}

ObsVector observation_model(const StateVector& state) {
  ObsVector y;
  y << state(kX), state(kY), state(kZ), state(kYaw), state(kLength), state(kWidth), state(kHeight);
  return y;
}

ObsVector observation_from_box(const DetectionBox& box) {
  ObsVector y;
  y << box.center.x(), box.center.y(), box.center.z(), box.yaw, box.dims.x(), box.dims.y(), box.dims.z();
  return y;
}

DetectionBox box_from_state(const StateVector& state, ObjectClass object_class, double score) {
  DetectionBox box;
  box.center = state.head<3>();
  box.yaw = wrap_angle(state(kYaw));
  box.dims = {state(kLength), state(kWidth), state(kHeight)};
  box.object_class = object_class;
  box.score = score;
  return box;
}

Track spawn_track(std::uint64_t id, const DetectionBox& box, const UkfParams& params) {
  Track t;
  t.id = id;
  const ObsVector y = observation_from_box(box);
  t.state.mean << y(0), y(1), y(2), wrap_angle(y(3)), 0.0, y(4), y(5), y(6);
  t.state.covariance.setZero();
  const Eigen::Matrix<double, kObsDim, kStateDim> h = observation_jacobian();
  t.state.covariance = h.transpose() * params.measurement_noise * h;
  t.state.covariance(kSpeed, kSpeed) = params.initial_velocity_variance;
  t.hits = 1;
  t.object_class = box.object_class;
  t.last_observed_z = box.center.z();
  return t;
}

bool classify_dynamic(const StateVector& state, double threshold) {
  return std::abs(state(kSpeed)) > threshold;
}

double wrap_half_turn(double angle) {
  double a = wrap_angle(angle);
  if (a > 0.5 * kPi) a -= kPi;
  if (a <= -0.5 * kPi) a += kPi;
  return a;
}

Track ukf_predict(Track track, double dt, const UkfParams& params) {
  if (dt < 0.0) throw std::invalid_argument("dt must be non-negative");
  const SigmaPoints s = sigma_points(track.state.mean, track.state.covariance, params);
  Eigen::Matrix<double, kStateDim, Eigen::Dynamic> propagated(kStateDim, s.points.cols());
  for (Eigen::Index i = 0; i < s.points.cols(); ++i) {
    propagated.col(i) = motion_model(s.points.col(i), dt);
  }
  StateVector mean = weighted_mean<kStateDim>(propagated, s.mean_weights, kYaw);
  const auto dev = deviations<kStateDim>(propagated, mean, kYaw);
  StateMatrix cov = dev * s.cov_weights.asDiagonal() * dev.transpose() + params.process_noise * dt;
  symmetrize(cov);

  sanitize(mean);
  track.state.mean = mean;
  track.state.covariance = cov;
  ++track.age_since_update;
  return track;
}

Track ukf_update(Track track, const DetectionBox& detection, const UkfParams& params) {
  const StateVector& prior = track.state.mean;
  const SigmaPoints s = sigma_points(prior, track.state.covariance, params);
  Eigen::Matrix<double, kStateDim, Eigen::Dynamic> states = s.points;
  Eigen::Matrix<double, kObsDim, Eigen::Dynamic> observed(kObsDim, s.points.cols());
  for (Eigen::Index i = 0; i < s.points.cols(); ++i) observed.col(i) = observation_model(states.col(i));

  const ObsVector y_hat = weighted_mean<kObsDim>(observed, s.mean_weights, kObsYaw);
  const auto dy = deviations<kObsDim>(observed, y_hat, kObsYaw);
  const auto dx = deviations<kStateDim>(states, prior, kYaw);

  ObsMatrix p_yy = dy * s.cov_weights.asDiagonal() * dy.transpose() + params.measurement_noise;
  symmetrize(p_yy);
  const Eigen::Matrix<double, kStateDim, kObsDim> p_xy = dx * s.cov_weights.asDiagonal() * dy.transpose();
  const Eigen::Matrix<double, kStateDim, kObsDim> gain = p_xy * inverse_innovation(p_yy);

  StateVector mean = prior + gain * innovation(detection, y_hat);
  StateMatrix cov = track.state.covariance - gain * p_yy * gain.transpose();
  symmetrize(cov);

  sanitize(mean);
  track.state.mean = mean;
  track.state.covariance = cov;
  record_update(track, detection, params);
  return track;
}

StateMatrix motion_jacobian(const StateVector& state, double dt) {
  StateMatrix f = StateMatrix::Identity();
  const double c = std::cos(state(kYaw));
  const double s = std::sin(state(kYaw));
  f(kX, kYaw) = -state(kSpeed) * s * dt;
  f(kX, kSpeed) = c * dt;
  f(kY, kYaw) = state(kSpeed) * c * dt;
  f(kY, kSpeed) = s * dt;
  return f;
}

Track ekf_predict(Track track, double dt, const UkfParams& params) {
  if (dt < 0.0) throw std::invalid_argument("dt must be non-negative");
  const StateMatrix f = motion_jacobian(track.state.mean, dt);
  StateVector mean = motion_model(track.state.mean, dt);
  StateMatrix cov = f * track.state.covariance * f.transpose() + params.process_noise * dt;
  symmetrize(cov);
  sanitize(mean);
  track.state.mean = mean;
  track.state.covariance = cov;
  ++track.age_since_update;
  return track;
}

Track ekf_update(Track track, const DetectionBox& detection, const UkfParams& params) {
  const auto h = observation_jacobian();
  const StateMatrix& p = track.state.covariance;
  ObsMatrix s = h * p * h.transpose() + params.measurement_noise;
  symmetrize(s);
  const Eigen::Matrix<double, kStateDim, kObsDim> gain = p * h.transpose() * inverse_innovation(s);
  StateVector mean = track.state.mean + gain * innovation(detection, observation_model(track.state.mean));
  StateMatrix cov = p - gain * s * gain.transpose();
  symmetrize(cov);
  sanitize(mean);
  track.state.mean = mean;
  track.state.covariance = cov;
  record_update(track, detection, params);
  return track;
}

Association associate_nn(const std::vector<Track>& tracks, const std::vector<DetectionBox>& detections,
                         double gate) {
  struct Candidate {
    double distance;
    std::uint64_t track_id;
    std::size_t track_pos;
    std::size_t detection;
  };
  std::vector<Candidate> candidates;
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    const Eigen::Vector3d center = tracks[t].state.mean.head<3>();
    for (std::size_t d = 0; d < detections.size(); ++d) {
      const double dist = (center - detections[d].center).norm();
      if (dist <= gate) candidates.push_back({dist, tracks[t].id, t, d});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.distance, a.track_id, a.detection) < std::tie(b.distance, b.track_id, b.detection);
  });

  Association out;
  std::vector<bool> track_used(tracks.size(), false);
  std::vector<bool> detection_used(detections.size(), false);
  for (const auto& c : candidates) {
    if (track_used[c.track_pos] || detection_used[c.detection]) continue;
    track_used[c.track_pos] = true;
    detection_used[c.detection] = true;
    out.matches.emplace_back(c.track_pos, c.detection);
  }
  std::sort(out.matches.begin(), out.matches.end());
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    if (!track_used[t]) out.unmatched_tracks.push_back(t);
  }
  for (std::size_t d = 0; d < detections.size(); ++d) {
    if (!detection_used[d]) out.unmatched_detections.push_back(d);
  }
  return out;
}

MultiObjectTracker::MultiObjectTracker(UkfParams params, TrackerKind kind)
    : params_(std::move(params)), kind_(kind) {
  params_.validate();
}

TrackerStep MultiObjectTracker::step(const DetectionFrame& frame, double dt) {
  const bool ukf = kind_ == TrackerKind::kUkf;
  for (auto& track : tracks_) {
    track = ukf ? ukf_predict(std::move(track), dt, params_) : ekf_predict(std::move(track), dt, params_);
  }

  const Association assoc = associate_nn(tracks_, frame.boxes, params_.gate_distance);

  TrackerStep out;
  double dz_sum = 0.0;
  std::size_t dz_count = 0;
  for (const auto& [t, d] : assoc.matches) {
    Track& track = tracks_[t];
    const DetectionBox& det = frame.boxes[d];
    // age 1 here means the track was also updated on the previous scan
    if (track.age_since_update == 1) {
      dz_sum += det.center.z() - track.last_observed_z;
      ++dz_count;
    }
    track = ukf ? ukf_update(std::move(track), det, params_) : ekf_update(std::move(track), det, params_);
  }
  if (dz_count > 0) out.mean_box_dz = dz_sum / static_cast<double>(dz_count);

  std::erase_if(tracks_, [&](const Track& t) { return t.age_since_update > params_.age_max; });

  for (std::size_t d : assoc.unmatched_detections) {
    tracks_.push_back(spawn_track(next_id_++, frame.boxes[d], params_));
  }

  for (const auto& track : tracks_) {
    if (track.dynamic) out.dynamic_boxes.push_back(box_from_state(track.state.mean, track.object_class));
  }
  return out;
}

}  // namespace dynlo
