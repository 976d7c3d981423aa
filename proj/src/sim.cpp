#include "dynlo/sim.hpp"

#include "dynlo/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dynlo {
namespace {

struct Surface {
  SimRect rect;
  int solid = -1;  // index into the per-scan solid list, -1 for bare rects
  PointLabel label = PointLabel::kStatic;
};

void box_faces(const DetectionBox& box, int solid, PointLabel label, std::vector<Surface>& out) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const Eigen::Vector3d ex(c, s, 0.0);
  const Eigen::Vector3d ey(-s, c, 0.0);
  const Eigen::Vector3d ez = Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d hx = 0.5 * box.dims.x() * ex;
  const Eigen::Vector3d hy = 0.5 * box.dims.y() * ey;
  const Eigen::Vector3d hz = 0.5 * box.dims.z() * ez;
  for (double sign : {-1.0, 1.0}) {
    out.push_back({{box.center + sign * hx, hy, hz}, solid, label});
    out.push_back({{box.center + sign * hy, hx, hz}, solid, label});
  }
  out.push_back({{box.center + hz, hx, hy}, solid, label});
}

// Parameter-space window of `rect` covering its intersection with the ball of
// radius `range` around `origin`. Returns the window area, 0 if disjoint.
double clip_to_ball(const SimRect& rect, const Eigen::Vector3d& origin, double range, Eigen::Vector4d& window) {
  const double la = rect.half_a.norm();
  const double lb = rect.half_b.norm();
  if (la <= 0.0 || lb <= 0.0) return 0.0;
  const Eigen::Vector3d normal = rect.half_a.cross(rect.half_b).normalized();
  const Eigen::Vector3d rel = origin - rect.center;
  const double d = rel.dot(normal);
  if (std::abs(d) >= range) return 0.0;
  const double rho = std::sqrt(range * range - d * d);
  const double s0 = rel.dot(rect.half_a) / (la * la);
  const double t0 = rel.dot(rect.half_b) / (lb * lb);
  window = {std::max(-1.0, s0 - rho / la), std::min(1.0, s0 + rho / la), std::max(-1.0, t0 - rho / lb),
            std::min(1.0, t0 + rho / lb)};
  if (window[0] >= window[1] || window[2] >= window[3]) return 0.0;
  return (window[1] - window[0]) * la * (window[3] - window[2]) * lb;
}

PointCloud sample_scan(const SimScene& scene, std::size_t k, std::uint64_t seed) {
  const double t = static_cast<double>(k) * scene.dt;
  const Pose& ego = scene.ego_path[k];
  const Pose to_body = ego.inverse();
  const SimSensor& sensor = scene.sensor;

  std::vector<DetectionBox> solids = scene.boxes;
  std::vector<Surface> surfaces;
  for (const auto& r : scene.rects) surfaces.push_back({r, -1, PointLabel::kStatic});
  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    box_faces(scene.boxes[i], static_cast<int>(i), PointLabel::kStatic, surfaces);
  }
  for (const auto& m : scene.movers) {
    const int solid = static_cast<int>(solids.size());
    solids.push_back(m.box_at(t));
    box_faces(solids.back(), solid, m.moving() ? PointLabel::kDynamic : PointLabel::kStatic, surfaces);
  }

  std::vector<Eigen::Vector4d> windows(surfaces.size());
  std::vector<double> weights(surfaces.size());
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    weights[i] = clip_to_ball(surfaces[i].rect, ego.translation, sensor.max_range, windows[i]);
  }

  PointCloud cloud;
  cloud.reserve(sensor.points_per_scan, false, true);
  if (std::all_of(weights.begin(), weights.end(), [](double w) { return w <= 0.0; })) return cloud;

  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  const double r0_sq = sensor.density_range * sensor.density_range;
  const double max_sq = sensor.max_range * sensor.max_range;
  const std::size_t max_attempts = 400 * sensor.points_per_scan + 1000;
  for (std::size_t attempt = 0; attempt < max_attempts && cloud.size() < sensor.points_per_scan; ++attempt) {
    const std::size_t si = pick(rng);
    const Surface& surface = surfaces[si];
    const Eigen::Vector4d& w = windows[si];
    const double s = w[0] + (w[1] - w[0]) * unit(rng);
    const double u = w[2] + (w[3] - w[2]) * unit(rng);
    const double accept = unit(rng);
    const Eigen::Vector3d p = surface.rect.center + s * surface.rect.half_a + u * surface.rect.half_b;
    const double r_sq = (p - ego.translation).squaredNorm();
    if (r_sq > max_sq) continue;
    if (r_sq > r0_sq && accept * r_sq > r0_sq) continue;
    bool hidden = false;
    for (std::size_t j = 0; j < solids.size() && !hidden; ++j) {
      hidden = static_cast<int>(j) != surface.solid && point_in_box(p, solids[j], 0.0);
    }
    if (hidden) continue;
    Eigen::Vector3d q = to_body * p;
    if (sensor.noise_sigma > 0.0) {
      q += sensor.noise_sigma * Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
    }
    cloud.points.push_back(q);
    cloud.labels.push_back(surface.label);
  }
  return cloud;
}

double parse_number(const std::string& token, std::size_t line_number) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || !std::isfinite(v)) {
    throw std::runtime_error("scene line " + std::to_string(line_number) + ": invalid number '" + token + "'");
  }
  return v;
}

}  // namespace

DetectionBox SimMover::box_at(double t) const {
  DetectionBox b = box;
  b.center += t * velocity;
  return b;
}

void SimScene::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("scene dt must be positive");
  if (ego_path.empty()) throw std::invalid_argument("scene has no ego poses");
  if (!(sensor.noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be non-negative");
  if (!(sensor.max_range > 0.0)) throw std::invalid_argument("max_range must be positive");
  if (!(sensor.density_range > 0.0)) throw std::invalid_argument("density_range must be positive");
  for (const auto& m : movers) {
    if (!m.velocity.allFinite() || !m.box.valid()) throw std::invalid_argument("invalid mover");
  }
  for (const auto& b : boxes) {
    if (!b.valid()) throw std::invalid_argument("invalid static box");
  }
  for (const auto& r : rects) {
    const double la = r.half_a.norm();
    const double lb = r.half_b.norm();
    if (!(la > 0.0 && lb > 0.0) || std::abs(r.half_a.dot(r.half_b)) > 1e-9 * la * lb) {
      throw std::invalid_argument("rect axes must be non-zero and orthogonal");
    }
  }
  for (const auto& p : ego_path) {
    if (!p.translation.allFinite() || !p.rotation.allFinite()) throw std::invalid_argument("non-finite ego pose");
  }
}

SimOutput simulate(const SimScene& scene, std::uint64_t seed) {
  scene.validate();
  const std::size_t n = scene.ego_path.size();
  SimOutput out;
  out.scans.resize(n);
  out.detections.resize(n);
  out.ground_truth.resize(n);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    out.scans[static_cast<std::size_t>(i)] = sample_scan(scene, static_cast<std::size_t>(i), seed);
  }

  const Pose origin_inv = scene.ego_path.front().inverse();
  for (std::size_t k = 0; k < n; ++k) {
    const Pose& ego = scene.ego_path[k];
    const Pose to_body = ego.inverse();
    const double t = static_cast<double>(k) * scene.dt;
    DetectionFrame& frame = out.detections[k];
    frame.scan_index = k;
    for (const auto& m : scene.movers) {
      DetectionBox b = m.box_at(t);
      if ((b.center - ego.translation).norm() > scene.sensor.max_range) continue;
      b = transform_box(to_body, b);
      b.score = 1.0;
      frame.boxes.push_back(b);
    }
    out.ground_truth[k] = {k, t, origin_inv * ego};
  }
  return out;
}

SimScene parse_scene(std::istream& in) {
  SimScene scene;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string key;
    if (!(fields >> key)) continue;
    std::string cls;
    if (key == "mover" && !(fields >> cls)) {
      throw std::runtime_error("scene line " + std::to_string(line_number) + ": missing mover class");
    }
    std::vector<double> v;
    for (std::string tok; fields >> tok;) v.push_back(parse_number(tok, line_number));
    auto need = [&](std::size_t count) {
      if (v.size() != count) {
        throw std::runtime_error("scene line " + std::to_string(line_number) + ": '" + key + "' expects " +
                                 std::to_string(count) + " values, got " + std::to_string(v.size()));
      }
    };
    if (key == "dt") {
      need(1);
      scene.dt = v[0];
    } else if (key == "points_per_scan") {
      need(1);
      if (v[0] < 0.0) throw std::runtime_error("scene line " + std::to_string(line_number) + ": negative count");
      scene.sensor.points_per_scan = static_cast<std::size_t>(v[0]);
    } else if (key == "max_range") {
      need(1);
      scene.sensor.max_range = v[0];
    } else if (key == "noise_sigma") {
      need(1);
      scene.sensor.noise_sigma = v[0];
    } else if (key == "density_range") {
      need(1);
      scene.sensor.density_range = v[0];
    } else if (key == "rect") {
      need(9);
      scene.rects.push_back({{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, {v[6], v[7], v[8]}});
    } else if (key == "box") {
      need(7);
      DetectionBox b;
      b.center = {v[0], v[1], v[2]};
      b.dims = {v[3], v[4], v[5]};
      b.yaw = wrap_angle(v[6]);
      scene.boxes.push_back(b);
    } else if (key == "mover") {
      need(10);
      SimMover m;
      try {
        m.box.object_class = parse_object_class(cls);
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error("scene line " + std::to_string(line_number) + ": " + e.what());
      }
      m.box.center = {v[0], v[1], v[2]};
      m.box.dims = {v[3], v[4], v[5]};
      m.box.yaw = wrap_angle(v[6]);
      m.velocity = {v[7], v[8], v[9]};
      scene.movers.push_back(m);
    } else if (key == "ego_pose") {
      need(6);
      scene.ego_path.push_back(Pose::from_euler(v[3], v[4], v[5], {v[0], v[1], v[2]}));
    } else if (key == "ego_motion") {
      need(7);
      if (v[6] < 1.0) throw std::runtime_error("scene line " + std::to_string(line_number) + ": count must be >= 1");
      double x = v[0];
      double y = v[1];
      double yaw = v[3];
      const auto count = static_cast<std::size_t>(v[6]);
      for (std::size_t i = 0; i < count; ++i) {
        scene.ego_path.push_back(Pose::from_euler(0.0, 0.0, yaw, {x, y, v[2]}));
        x += v[4] * scene.dt * std::cos(yaw);
        y += v[4] * scene.dt * std::sin(yaw);
        yaw = wrap_angle(yaw + v[5] * scene.dt);
      }
    } else {
      throw std::runtime_error("scene line " + std::to_string(line_number) + ": unknown keyword '" + key + "'");
    }
  }
  try {
    scene.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("invalid scene: ") + e.what());
  }
  return scene;
}

SimScene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene " + path.string());
  return parse_scene(in);
}

std::string serialize_scene(const SimScene& scene) {
  using io::format_double;
  std::ostringstream out;
  auto put = [&](std::initializer_list<double> values) {
    for (double v : values) out << ' ' << format_double(v);
    out << '\n';
  };
  out << "dt";
  put({scene.dt});
  out << "points_per_scan " << scene.sensor.points_per_scan << '\n';
  out << "max_range";
  put({scene.sensor.max_range});
  out << "noise_sigma";
  put({scene.sensor.noise_sigma});
  out << "density_range";
  put({scene.sensor.density_range});
  for (const auto& r : scene.rects) {
    out << "rect";
    put({r.center.x(), r.center.y(), r.center.z(), r.half_a.x(), r.half_a.y(), r.half_a.z(), r.half_b.x(),
         r.half_b.y(), r.half_b.z()});
  }
  for (const auto& b : scene.boxes) {
    out << "box";
    put({b.center.x(), b.center.y(), b.center.z(), b.dims.x(), b.dims.y(), b.dims.z(), b.yaw});
  }
  for (const auto& m : scene.movers) {
    const auto& b = m.box;
    out << "mover " << to_string(b.object_class);
    put({b.center.x(), b.center.y(), b.center.z(), b.dims.x(), b.dims.y(), b.dims.z(), b.yaw, m.velocity.x(),
         m.velocity.y(), m.velocity.z()});
  }
  for (const auto& p : scene.ego_path) {
    out << "ego_pose";
    put({p.translation.x(), p.translation.y(), p.translation.z(), p.roll(), p.pitch(), p.yaw()});
  }
  return out.str();
}

SimScene reference_scene(std::size_t scans, std::size_t points_per_scan) {
  SimScene scene;
  scene.dt = 0.1;
  scene.sensor.points_per_scan = points_per_scan;
  scene.sensor.max_range = 40.0;
  scene.sensor.noise_sigma = 0.02;
  scene.sensor.density_range = 6.0;

  const double speed = 5.0;  // 0.5 m per scan
  const double length = speed * scene.dt * static_cast<double>(scans);
  const double x_min = -50.0;
  const double x_max = length + 50.0;

  // ground
  scene.rects.push_back({{0.5 * (x_min + x_max), 0.0, 0.0}, {0.5 * (x_max - x_min), 0.0, 0.0}, {0.0, 30.0, 0.0}});

  // building rows with irregular gaps, sizes and setbacks
  const double widths[] = {9.0, 12.0, 7.0, 10.0, 14.0, 8.0};
  const double heights[] = {8.0, 12.0, 6.0, 15.0, 9.0, 7.0};
  const double gaps[] = {4.0, 7.0, 3.0, 6.0, 5.0};
  for (int side : {-1, 1}) {
    double x = x_min + (side > 0 ? 0.0 : 3.5);
    for (int i = 0; x < x_max; ++i) {
      const double w = widths[(i + (side > 0 ? 0 : 2)) % 6];
      const double h = heights[(i + (side > 0 ? 1 : 4)) % 6];
      const double setback = 13.0 + 1.5 * ((i * 7 + (side > 0 ? 0 : 3)) % 3);
      const double depth = 6.0;
      DetectionBox b;
      b.center = {x + 0.5 * w, side * (setback + 0.5 * depth), 0.5 * h};
      b.dims = {w, depth, h};
      b.yaw = 0.0;
      scene.boxes.push_back(b);
      x += w + gaps[i % 5];
    }
  }

  // poles along both curbs
  for (double x = x_min + 5.0; x < x_max; x += 17.0) {
    for (int side : {-1, 1}) {
      DetectionBox b;
      b.center = {x + (side > 0 ? 6.0 : 0.0), side * 9.5, 3.0};
      b.dims = {0.4, 0.4, 6.0};
      scene.boxes.push_back(b);
    }
  }

  auto car = [](double x, double y, double yaw, Eigen::Vector3d v, ObjectClass cls = ObjectClass::kCar) {
    SimMover m;
    m.box.object_class = cls;
    if (cls == ObjectClass::kCar) {
      m.box.dims = {4.5, 1.8, 1.6};
    } else {
      m.box.dims = {1.8, 0.6, 1.7};
    }
    m.box.center = {x, y, 0.5 * m.box.dims.z()};
    m.box.yaw = yaw;
    m.velocity = v;
    return m;
  };

  // parked cars along the curbs
  for (double x = 6.0; x < length + 20.0; x += 11.0) {
    scene.movers.push_back(car(x, 7.0, 0.0, Eigen::Vector3d::Zero()));
    scene.movers.push_back(car(x + 5.5, -7.0, kPi, Eigen::Vector3d::Zero()));
  }

  // traffic: crossing the ego path, oncoming and overtaking
  const double duration = scene.dt * static_cast<double>(scans);
  for (int i = 0; i < 6; ++i) {
    // crossing ahead of the ego at times spread over the run
    const double t_cross = (0.1 + 0.15 * i) * duration;
    const double x_cross = speed * t_cross + 8.0;
    const double vy = (i % 2 == 0) ? 5.0 : -5.0;
    scene.movers.push_back(car(x_cross, -vy * t_cross, vy > 0 ? kPi / 2 : -kPi / 2, {0.0, vy, 0.0}));
  }
  for (int i = 0; i < 4; ++i) {
    scene.movers.push_back(car(40.0 + 35.0 * i, -3.5, kPi, {-8.0, 0.0, 0.0}));
  }
  scene.movers.push_back(car(-6.0, 3.5, 0.0, {7.0, 0.0, 0.0}));
  scene.movers.push_back(car(10.0, 4.8, 0.0, {3.0, 0.0, 0.0}, ObjectClass::kCyclist));
  scene.movers.push_back(car(60.0, -4.8, kPi, {-3.5, 0.0, 0.0}, ObjectClass::kCyclist));

  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  for (std::size_t k = 0; k < scans; ++k) {
    // gentle weave so the heading is not constant
    const double yaw_rate = 0.04 * std::sin(2.0 * kPi * static_cast<double>(k) / 120.0);
    scene.ego_path.push_back(Pose::from_euler(0.0, 0.0, yaw, {x, y, 1.8}));
    x += speed * scene.dt * std::cos(yaw);
    y += speed * scene.dt * std::sin(yaw);
    yaw += yaw_rate * scene.dt;
  }
  return scene;
}

void write_sim_output(const std::filesystem::path& dir, const SimOutput& output) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "scans");
  fs::create_directories(dir / "detections");
  fs::create_directories(dir / "labels");
  for (std::size_t k = 0; k < output.scans.size(); ++k) {
    io::write_scan_bin(dir / "scans" / io::indexed_name(k, ".bin"), output.scans[k]);
    io::write_labels(dir / "labels" / io::indexed_name(k, ".txt"), output.scans[k].labels);
    save_detection_frame(dir / "detections" / io::indexed_name(k, ".txt"), output.detections[k]);
  }
  io::write_trajectory_kitti(dir / "poses.txt", output.ground_truth);
  io::write_trajectory_tum(dir / "poses_tum.txt", output.ground_truth);
}

}  // namespace dynlo
