#include "dynlo/config.hpp"

#include "dynlo/io.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dynlo {
namespace {

using Tokens = std::vector<std::string>;

double to_double(const std::string& token) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v)) {
    throw std::invalid_argument("invalid number '" + token + "'");
  }
  return v;
}

long long to_integer(const std::string& token) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw std::invalid_argument("invalid integer '" + token + "'");
  }
  return v;
}

bool to_bool(const std::string& token) {
  if (token == "true" || token == "1" || token == "on") return true;
  if (token == "false" || token == "0" || token == "off") return false;
  throw std::invalid_argument("invalid boolean '" + token + "'");
}

void expect_count(const Tokens& values, std::size_t n) {
  if (values.size() != n) {
    throw std::invalid_argument("expected " + std::to_string(n) + " value(s), got " + std::to_string(values.size()));
  }
}

struct Field {
  std::function<void(PipelineConfig&, const Tokens&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

Field real(double PipelineConfig::*member) {
  return {[member](PipelineConfig& c, const Tokens& v) { expect_count(v, 1); c.*member = to_double(v[0]); },
          [member](const PipelineConfig& c) { return io::format_double(c.*member); }};
}

template <typename Getter>
Field real_at(Getter ref) {
  return {[ref](PipelineConfig& c, const Tokens& v) { expect_count(v, 1); ref(c) = to_double(v[0]); },
          [ref](const PipelineConfig& c) { return io::format_double(ref(const_cast<PipelineConfig&>(c))); }};
}

template <typename Getter>
Field integer_at(Getter ref) {
  return {[ref](PipelineConfig& c, const Tokens& v) {
            expect_count(v, 1);
            const long long n = to_integer(v[0]);
            if (n < 0) throw std::invalid_argument("value must be non-negative");
            ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(n);
          },
          [ref](const PipelineConfig& c) { return std::to_string(ref(const_cast<PipelineConfig&>(c))); }};
}

Field boolean(bool PipelineConfig::*member) {
  return {[member](PipelineConfig& c, const Tokens& v) { expect_count(v, 1); c.*member = to_bool(v[0]); },
          [member](const PipelineConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

template <int N, typename Getter>
Field diagonal_at(Getter ref) {
  return {[ref](PipelineConfig& c, const Tokens& v) {
            expect_count(v, N);
            auto& m = ref(c);
            m.setZero();
            for (int i = 0; i < N; ++i) m(i, i) = to_double(v[static_cast<std::size_t>(i)]);
          },
          [ref](const PipelineConfig& c) {
            const auto& m = ref(const_cast<PipelineConfig&>(c));
            std::string out;
            for (int i = 0; i < N; ++i) {
              if (i) out += ' ';
              out += io::format_double(m(i, i));
            }
            return out;
          }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"crop_half_extent", real_at([](PipelineConfig& c) -> double& { return c.preprocess.self_crop_half_extent; })},
      {"voxel_leaf", real_at([](PipelineConfig& c) -> double& { return c.preprocess.voxel_leaf; })},
      {"covariance_knn", integer_at([](PipelineConfig& c) -> std::size_t& { return c.preprocess.covariance_knn; })},
      {"plane_epsilon", real_at([](PipelineConfig& c) -> double& { return c.preprocess.plane_epsilon; })},
      {"detection_min_score", real(&PipelineConfig::min_score)},
      {"detection_classes",
       {[](PipelineConfig& c, const Tokens& v) {
          if (v.empty()) throw std::invalid_argument("expected at least one class");
          c.classes.clear();
          for (const auto& name : v) c.classes.insert(parse_object_class(name));
        },
        [](const PipelineConfig& c) {
          std::string out;
          for (ObjectClass cls : c.classes) {
            if (!out.empty()) out += ' ';
            out += to_string(cls);
          }
          return out;
        }}},
      {"tracker_kind",
       {[](PipelineConfig& c, const Tokens& v) {
          expect_count(v, 1);
          if (v[0] == "ukf") {
            c.tracker_kind = TrackerKind::kUkf;
          } else if (v[0] == "ekf") {
            c.tracker_kind = TrackerKind::kEkf;
          } else {
            throw std::invalid_argument("tracker_kind must be ukf or ekf");
          }
        },
        [](const PipelineConfig& c) { return std::string(c.tracker_kind == TrackerKind::kUkf ? "ukf" : "ekf"); }}},
      {"ukf_alpha", real_at([](PipelineConfig& c) -> double& { return c.tracker.alpha; })},
      {"ukf_beta", real_at([](PipelineConfig& c) -> double& { return c.tracker.beta; })},
      {"ukf_kappa", real_at([](PipelineConfig& c) -> double& { return c.tracker.kappa; })},
      {"process_noise", diagonal_at<kStateDim>([](PipelineConfig& c) -> StateMatrix& { return c.tracker.process_noise; })},
      {"measurement_noise", diagonal_at<kObsDim>([](PipelineConfig& c) -> ObsMatrix& { return c.tracker.measurement_noise; })},
      {"initial_velocity_variance", real_at([](PipelineConfig& c) -> double& { return c.tracker.initial_velocity_variance; })},
      {"dynamic_speed_threshold", real_at([](PipelineConfig& c) -> double& { return c.tracker.dynamic_speed_threshold; })},
      {"gate_distance", real_at([](PipelineConfig& c) -> double& { return c.tracker.gate_distance; })},
      {"age_max", integer_at([](PipelineConfig& c) -> int& { return c.tracker.age_max; })},
      {"min_hits_dynamic", integer_at([](PipelineConfig& c) -> int& { return c.tracker.min_hits_dynamic; })},
      {"removal_margin", real(&PipelineConfig::removal_margin)},
      {"gicp_max_correspondence_distance", real_at([](PipelineConfig& c) -> double& { return c.gicp.max_correspondence_distance; })},
      {"gicp_max_iterations", integer_at([](PipelineConfig& c) -> int& { return c.gicp.max_iterations; })},
      {"gicp_translation_epsilon", real_at([](PipelineConfig& c) -> double& { return c.gicp.translation_epsilon; })},
      {"gicp_rotation_epsilon", real_at([](PipelineConfig& c) -> double& { return c.gicp.rotation_epsilon; })},
      {"constraint_window_scans", integer_at([](PipelineConfig& c) -> int& { return c.constraint.window_scans; })},
      {"constraint_min_inliers", integer_at([](PipelineConfig& c) -> int& { return c.constraint.min_inliers; })},
      {"constraint_plane_inlier_distance", real_at([](PipelineConfig& c) -> double& { return c.constraint.plane_inlier_distance; })},
      {"constraint_z_change_threshold", real_at([](PipelineConfig& c) -> double& { return c.constraint.z_change_threshold; })},
      {"constraint_blend_weight", real_at([](PipelineConfig& c) -> double& { return c.constraint.blend_weight; })},
      {"submap_k", integer_at([](PipelineConfig& c) -> std::size_t& { return c.submap.k; })},
      {"submap_l", integer_at([](PipelineConfig& c) -> std::size_t& { return c.submap.l; })},
      {"submap_j", integer_at([](PipelineConfig& c) -> std::size_t& { return c.submap.j; })},
      {"submap_concave_alpha", real_at([](PipelineConfig& c) -> double& { return c.submap.concave_alpha; })},
      {"keyframe_cell_size", real_at([](PipelineConfig& c) -> double& { return c.submap.cell_size; })},
      {"scan_period", real(&PipelineConfig::scan_period)},
      {"enable_removal", boolean(&PipelineConfig::enable_removal)},
      {"enable_constraint", boolean(&PipelineConfig::enable_constraint)},
  };
  return table;
}

}  // namespace

void PipelineConfig::validate() const {
  preprocess.validate();
  tracker.validate();
  gicp.validate();
  constraint.validate();
  if (!(min_score >= 0.0 && min_score <= 1.0)) throw std::invalid_argument("detection_min_score must lie in [0, 1]");
  if (classes.empty()) throw std::invalid_argument("detection_classes must not be empty");
  if (!(removal_margin >= 0.0)) throw std::invalid_argument("removal_margin must be non-negative");
  if (!(scan_period > 0.0)) throw std::invalid_argument("scan_period must be positive");
  if (!(submap.cell_size > 0.0)) throw std::invalid_argument("keyframe_cell_size must be positive");
  if (submap.k == 0) throw std::invalid_argument("submap_k must be at least 1");
}

PipelineConfig parse_config(std::istream& in) {
  std::map<std::string, const Field*> lookup;
  for (const auto& [key, field] : fields()) lookup.emplace(key, &field);

  PipelineConfig config;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    for (char& ch : line) {
      if (ch == '=' || ch == ',') ch = ' ';
    }
    std::istringstream tokens(line);
    std::string key;
    if (!(tokens >> key)) continue;
    Tokens values;
    for (std::string v; tokens >> v;) values.push_back(v);
    const auto it = lookup.find(key);
    if (it == lookup.end()) {
      throw std::runtime_error("config line " + std::to_string(line_number) + ": unknown key '" + key + "'");
    }
    try {
      it->second->set(config, values);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("config line " + std::to_string(line_number) + " (" + key + "): " + e.what());
    }
  }
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("invalid config: ") + e.what());
  }
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_config(in);
}

std::string serialize_config(const PipelineConfig& config) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " " + field.get(config) + "\n";
  return out;
}

}  // namespace dynlo
