#include "dynlo/io.hpp"

#include "dynlo/detections.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dynlo::io {
namespace {

static_assert(std::endian::native == std::endian::little, "scan files are read as native little-endian floats");

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::vector<double> parse_numbers(const std::string& line, const fs::path& path, std::size_t line_number) {
  std::vector<double> values;
  std::istringstream fields(line);
  for (std::string token; fields >> token;) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(line_number) + ": invalid number '" +
                               token + "'");
    }
    values.push_back(v);
  }
  return values;
}

bool skip_line(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

PointCloud read_scan_bin(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  if (bytes % (4 * sizeof(float)) != 0) {
    throw std::runtime_error(path.string() + ": size is not a multiple of 16 bytes");
  }
  std::vector<float> raw(bytes / sizeof(float));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw std::runtime_error(path.string() + ": short read");
  PointCloud cloud;
  cloud.points.reserve(raw.size() / 4);
  for (std::size_t i = 0; i + 3 < raw.size(); i += 4) {
    cloud.points.emplace_back(raw[i], raw[i + 1], raw[i + 2]);
  }
  return cloud;
}

void write_scan_bin(const fs::path& path, const PointCloud& cloud) {
  std::vector<float> raw;
  raw.reserve(cloud.size() * 4);
  for (const auto& p : cloud.points) {
    raw.push_back(static_cast<float>(p.x()));
    raw.push_back(static_cast<float>(p.y()));
    raw.push_back(static_cast<float>(p.z()));
    raw.push_back(0.0f);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
}

std::vector<PointLabel> read_labels(const fs::path& path) {
  auto in = open_in(path);
  std::vector<PointLabel> labels;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (skip_line(line)) continue;
    const auto values = parse_numbers(line, path, line_number);
    if (values.size() != 1 || (values[0] != 0.0 && values[0] != 1.0)) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(line_number) + ": expected 0 or 1");
    }
    labels.push_back(values[0] == 1.0 ? PointLabel::kDynamic : PointLabel::kStatic);
  }
  return labels;
}

void write_labels(const fs::path& path, std::span<const PointLabel> labels) {
  auto out = open_out(path);
  std::string buffer;
  buffer.reserve(labels.size() * 2);
  for (PointLabel l : labels) {
    buffer += l == PointLabel::kDynamic ? '1' : '0';
    buffer += '\n';
  }
  out << buffer;
}

std::string indexed_name(std::size_t index, const std::string& extension) {
  char name[32];
  std::snprintf(name, sizeof(name), "%06zu", index);
  return std::string(name) + extension;
}

std::map<std::size_t, fs::path> list_indexed_files(const fs::path& dir, const std::string& extension) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::map<std::size_t, fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != extension) continue;
    const std::string stem = entry.path().stem().string();
    std::size_t index = 0;
    const auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), index);
    if (ec != std::errc{} || ptr != stem.data() + stem.size()) continue;
    files.emplace(index, entry.path());
  }
  return files;
}

void write_trajectory_kitti(const fs::path& path, const Trajectory& trajectory) {
  auto out = open_out(path);
  for (const auto& e : trajectory) {
    const Eigen::Matrix4d m = e.pose.matrix();
    std::string line;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        if (!line.empty()) line += ' ';
        line += format_double(m(r, c));
      }
    }
    out << line << '\n';
  }
}

void write_trajectory_tum(const fs::path& path, const Trajectory& trajectory) {
  auto out = open_out(path);
  for (const auto& e : trajectory) {
    const Eigen::Quaterniond q(e.pose.rotation);
    const Eigen::Vector3d& t = e.pose.translation;
    out << format_double(e.timestamp);
    for (double v : {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()}) out << ' ' << format_double(v);
    out << '\n';
  }
}

Trajectory read_trajectory(const fs::path& path, double scan_period) {
  auto in = open_in(path);
  Trajectory trajectory;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (skip_line(line)) continue;
    const auto v = parse_numbers(line, path, line_number);
    TrajectoryEntry e;
    e.scan_index = trajectory.size();
    if (v.size() == 12) {
      Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) m(r, c) = v[static_cast<std::size_t>(4 * r + c)];
      }
      e.pose = Pose::from_matrix(m);
      e.timestamp = static_cast<double>(e.scan_index) * scan_period;
    } else if (v.size() == 8) {
      e.timestamp = v[0];
      e.pose.translation = {v[1], v[2], v[3]};
      e.pose.rotation = Eigen::Quaterniond(v[7], v[4], v[5], v[6]).normalized().toRotationMatrix();
    } else {
      throw std::runtime_error(path.string() + ": line " + std::to_string(line_number) +
                               ": expected 12 (KITTI) or 8 (TUM) columns");
    }
    trajectory.push_back(e);
  }
  return trajectory;
}

void write_point_list(const fs::path& path, const PointCloud& cloud) {
  auto out = open_out(path);
  const bool labeled = cloud.has_labels();
  std::string buffer;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    buffer += format_double(p.x());
    buffer += ' ';
    buffer += format_double(p.y());
    buffer += ' ';
    buffer += format_double(p.z());
    if (labeled) buffer += cloud.labels[i] == PointLabel::kDynamic ? " 1" : " 0";
    buffer += '\n';
  }
  out << buffer;
}

PointCloud read_point_list(const fs::path& path) {
  auto in = open_in(path);
  PointCloud cloud;
  std::string line;
  std::size_t line_number = 0;
  bool labeled = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (skip_line(line)) continue;
    const auto v = parse_numbers(line, path, line_number);
    if (v.size() != 3 && v.size() != 4) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(line_number) + ": expected 3 or 4 columns");
    }
    if (cloud.points.empty()) labeled = v.size() == 4;
    cloud.points.emplace_back(v[0], v[1], v[2]);
    if (labeled) cloud.labels.push_back(v.size() == 4 && v[3] == 1.0 ? PointLabel::kDynamic : PointLabel::kStatic);
  }
  return cloud;
}

void write_tracks(const fs::path& path, const std::vector<Track>& tracks) {
  auto out = open_out(path);
  for (const auto& t : tracks) {
    const auto& m = t.state.mean;
    out << t.id << ' ' << (t.dynamic ? 1 : 0);
    for (int i : {kX, kY, kZ, kYaw, kSpeed, kLength, kWidth, kHeight}) out << ' ' << format_double(m(i));
    out << '\n';
  }
}

void write_provenance(const fs::path& path, const MapProvenance& p) {
  auto out = open_out(path);
  out << "# static_total static_kept dynamic_total dynamic_kept\n"
      << p.static_total << ' ' << p.static_kept << ' ' << p.dynamic_total << ' ' << p.dynamic_kept << '\n';
}

MapProvenance read_provenance(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (skip_line(line)) continue;
    std::istringstream fields(line);
    MapProvenance p;
    if (!(fields >> p.static_total >> p.static_kept >> p.dynamic_total >> p.dynamic_kept)) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(line_number) + ": expected 4 counts");
    }
    return p;
  }
  throw std::runtime_error(path.string() + ": no provenance record");
}

}  // namespace dynlo::io
