#include "dynlo/detections.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dynlo {
namespace {

double parse_double(const std::string& token, std::size_t line_number) {
  double value = 0.0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw std::runtime_error("line " + std::to_string(line_number) + ": invalid number '" + token + "'");
  }
  return value;
}

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

}  // namespace

DetectionFrame parse_detection_frame(std::istream& in, std::size_t scan_index) {
  DetectionFrame frame;
  frame.scan_index = scan_index;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string token; fields >> token;) tokens.push_back(token);
    if (tokens.size() != 9) {
      throw std::runtime_error("line " + std::to_string(line_number) + ": expected 9 columns, got " +
                               std::to_string(tokens.size()));
    }

    DetectionBox box;
    try {
      box.object_class = parse_object_class(tokens[0]);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("line " + std::to_string(line_number) + ": " + e.what());
    }
    box.score = parse_double(tokens[1], line_number);
    box.center = {parse_double(tokens[2], line_number), parse_double(tokens[3], line_number),
                  parse_double(tokens[4], line_number)};
    box.dims = {parse_double(tokens[5], line_number), parse_double(tokens[6], line_number),
                parse_double(tokens[7], line_number)};
    box.yaw = wrap_angle(parse_double(tokens[8], line_number));
    if (!box.valid()) {
      throw std::runtime_error("line " + std::to_string(line_number) +
                               ": box needs positive dimensions and a score in [0, 1]");
    }
    frame.boxes.push_back(box);
  }
  return frame;
}

std::size_t scan_index_from_path(const std::filesystem::path& path, std::size_t fallback) {
  const std::string stem = path.stem().string();
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), value);
  if (ec != std::errc{} || ptr != stem.data() + stem.size()) return fallback;
  return value;
}

DetectionFrame load_detection_frame(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open detection file " + path.string());
  try {
    return parse_detection_frame(in, scan_index_from_path(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string serialize_detection_frame(const DetectionFrame& frame) {
  std::string out = "# class score cx cy cz l w h yaw\n";
  for (const auto& b : frame.boxes) {
    out += std::string(to_string(b.object_class));
    for (double v : {b.score, b.center.x(), b.center.y(), b.center.z(), b.dims.x(), b.dims.y(),
                     b.dims.z(), b.yaw}) {
      out += ' ';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void save_detection_frame(const std::filesystem::path& path, const DetectionFrame& frame) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write detection file " + path.string());
  out << serialize_detection_frame(frame);
}

DetectionFrame filter_detections(const DetectionFrame& frame, double min_score,
                                 const std::set<ObjectClass>& classes) {
  DetectionFrame out;
  out.scan_index = frame.scan_index;
  for (const auto& box : frame.boxes) {
    if (box.score >= min_score && classes.contains(box.object_class)) out.boxes.push_back(box);
  }
  return out;
}

}  // namespace dynlo
