#pragma once

#include "dynlo/geometry.hpp"
#include "dynlo/metrics.hpp"
#include "dynlo/mot.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dynlo::io {

namespace fs = std::filesystem;

/// Little-endian float32 (x, y, z, intensity) records; intensity is dropped.
PointCloud read_scan_bin(const fs::path& path);
void write_scan_bin(const fs::path& path, const PointCloud& cloud);

/// One label per line: 0 static, 1 dynamic.
std::vector<PointLabel> read_labels(const fs::path& path);
void write_labels(const fs::path& path, std::span<const PointLabel> labels);

/// Files named NNNNNN<extension> in `dir`, keyed by scan index.
std::map<std::size_t, fs::path> list_indexed_files(const fs::path& dir, const std::string& extension);

std::string indexed_name(std::size_t index, const std::string& extension);

/// 12 values per line: row-major top 3x4 of the pose matrix.
void write_trajectory_kitti(const fs::path& path, const Trajectory& trajectory);
/// `timestamp tx ty tz qx qy qz qw` per line.
void write_trajectory_tum(const fs::path& path, const Trajectory& trajectory);
/// Accepts either format (12 or 8 columns). KITTI lines get index-based
/// timestamps spaced by `scan_period`.
Trajectory read_trajectory(const fs::path& path, double scan_period = 0.1);

/// `x y z` or `x y z label` per line.
void write_point_list(const fs::path& path, const PointCloud& cloud);
PointCloud read_point_list(const fs::path& path);

/// `track_id dynamic x y z yaw v l w h` per line.
void write_tracks(const fs::path& path, const std::vector<Track>& tracks);

/// `static_total static_kept dynamic_total dynamic_kept`.
void write_provenance(const fs::path& path, const MapProvenance& provenance);
MapProvenance read_provenance(const fs::path& path);

std::string format_double(double value);

}  // namespace dynlo::io
