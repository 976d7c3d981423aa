#include "dynlo/config.hpp"
#include "dynlo/io.hpp"
#include "dynlo/metrics.hpp"
#include "dynlo/pipeline.hpp"
#include "dynlo/sim.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace dynlo;

namespace {

constexpr const char* kProvenanceFile = "map_provenance.txt";

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string fmt_optional(const std::optional<double>& v, int digits) {
  return v ? fmt(*v, digits) : std::string("undefined");
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

struct RunArgs {
  std::string scans, detections, config, out_traj, out_map, stats, labels, out_traj_tum, tracks_dir;
  bool serial = false;
};

int cmd_run(const RunArgs& a) {
  const PipelineConfig config = load_config(a.config);
  std::optional<fs::path> labels;
  if (!a.labels.empty()) labels = fs::path(a.labels);
  DirectorySource source(a.scans, a.detections, config.scan_period, labels);

  if (!a.tracks_dir.empty()) fs::create_directories(a.tracks_dir);
  ScanCallback on_scan;
  if (!a.tracks_dir.empty()) {
    on_scan = [&](const Pipeline& p, const ScanStats& s) {
      io::write_tracks(fs::path(a.tracks_dir) / io::indexed_name(s.scan_index, ".txt"), p.tracker().tracks());
    };
  }
  const PipelineResult result =
      run_pipeline(source, config, a.serial ? Execution::kSerial : Execution::kParallel, on_scan);

  ensure_parent(a.out_traj);
  io::write_trajectory_kitti(a.out_traj, result.trajectory);
  if (!a.out_traj_tum.empty()) {
    ensure_parent(a.out_traj_tum);
    io::write_trajectory_tum(a.out_traj_tum, result.trajectory);
  }
  ensure_parent(a.out_map);
  io::write_point_list(a.out_map, result.map);
  if (labels) {
    const fs::path dir = fs::absolute(a.out_map).parent_path();
    io::write_provenance(dir / kProvenanceFile, result.provenance);
  }
  if (!a.stats.empty()) {
    ensure_parent(a.stats);
    write_stats(a.stats, result.stats);
  }

  const StageTimes t = mean_stage_times(result.stats);
  std::cout << "scans " << result.trajectory.size() << " keyframes_map_points " << result.map.size()
            << " solver_failures " << result.solver_failures << '\n'
            << "mean_ms preprocess " << fmt(t.preprocess_ms, 3) << " tracker " << fmt(t.tracker_ms, 3)
            << " odometry " << fmt(t.odometry_ms, 3) << " total " << fmt(t.total_ms(), 3) << '\n';
  return 0;
}

int cmd_simulate(const std::string& scene_path, bool reference, std::size_t reference_scans,
                 std::size_t points, std::uint64_t seed, const std::string& out) {
  SimScene scene;
  if (reference) {
    scene = reference_scene(reference_scans, points);
  } else {
    scene = load_scene(scene_path);
  }
  const SimOutput output = simulate(scene, seed);
  write_sim_output(out, output);
  std::cout << "wrote " << output.scans.size() << " scans to " << out << '\n';
  return 0;
}

int cmd_eval_traj(const std::string& est_path, const std::string& gt_path, std::size_t delta, double period) {
  const Trajectory est = io::read_trajectory(est_path, period);
  const Trajectory gt = io::read_trajectory(gt_path, period);
  std::cout << "APE_RMSE " << fmt(ape_rmse(est, gt)) << '\n'
            << "RPE_RMSE " << fmt(rpe_rmse(est, gt, delta)) << '\n'
            << "MAX_Z_DRIFT " << fmt(max_z_drift(est, gt)) << '\n';
  return 0;
}

int cmd_eval_map(const std::string& run_dir) {
  const fs::path path = fs::path(run_dir) / kProvenanceFile;
  if (!fs::exists(path)) {
    throw std::runtime_error("no " + std::string(kProvenanceFile) + " in " + run_dir +
                             " (run the pipeline with --labels)");
  }
  const MapQuality q = map_pr_rr_f1(io::read_provenance(path));
  std::cout << "PR " << fmt_optional(q.preserved_rate, 3) << '\n'
            << "RR " << fmt_optional(q.removed_rate, 3) << '\n'
            << "F1 " << fmt_optional(q.f1, 4) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic-object-aware LiDAR odometry"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run odometry over a scan directory");
  run_cmd->add_option("--scans", run.scans, "Directory of NNNNNN.bin scans")->required();
  run_cmd->add_option("--detections", run.detections, "Directory of NNNNNN.txt detection files")->required();
  run_cmd->add_option("--config", run.config, "Key-value configuration file")->required();
  run_cmd->add_option("--out-traj", run.out_traj, "Trajectory output (3x4 row-major per line)")->required();
  run_cmd->add_option("--out-map", run.out_map, "Map output (x y z [label] per line)")->required();
  run_cmd->add_option("--stats", run.stats, "Per-scan statistics output");
  run_cmd->add_option("--labels", run.labels, "Directory of per-point labels; enables map provenance");
  run_cmd->add_option("--out-traj-tum", run.out_traj_tum, "Trajectory output (timestamp t q)");
  run_cmd->add_option("--tracks-dir", run.tracks_dir, "Write tracker state per scan here");
  run_cmd->add_flag("--serial", run.serial, "Use the serial kernels");

  std::string scene_path, sim_out;
  std::uint64_t seed = 0;
  bool reference = false;
  std::size_t reference_scans = 200, reference_points = 8000;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic labeled sequence");
  auto* scene_opt = sim_cmd->add_option("--scene", scene_path, "Scene description file");
  auto* ref_flag = sim_cmd->add_flag("--reference", reference, "Use the built-in reference scene");
  scene_opt->excludes(ref_flag);
  sim_cmd->add_option("--reference-scans", reference_scans, "Scan count for --reference")->needs(ref_flag);
  sim_cmd->add_option("--reference-points", reference_points, "Points per scan for --reference")->needs(ref_flag);
  sim_cmd->add_option("--seed", seed, "Random seed")->required();
  sim_cmd->add_option("--out", sim_out, "Output directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate trajectories or maps");
  eval_cmd->require_subcommand(1);
  std::string est, gt;
  std::size_t delta = 1;
  double period = 0.1;
  auto* traj_cmd = eval_cmd->add_subcommand("traj", "APE / RPE RMSE of a trajectory");
  traj_cmd->add_option("--est", est, "Estimated trajectory")->required();
  traj_cmd->add_option("--gt", gt, "Ground-truth trajectory")->required();
  traj_cmd->add_option("--delta", delta, "RPE delta in scans")->check(CLI::PositiveNumber);
  traj_cmd->add_option("--scan-period", period, "Seconds per scan for KITTI-format files");
  std::string run_dir;
  auto* map_cmd = eval_cmd->add_subcommand("map", "PR / RR / F1 of a labeled run");
  map_cmd->add_option("--run-dir", run_dir, "Directory holding the run's map and provenance")->required();

  auto* config_cmd = app.add_subcommand("config", "Print the default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*sim_cmd) {
      if (!reference && scene_path.empty()) throw std::runtime_error("simulate needs --scene or --reference");
      return cmd_simulate(scene_path, reference, reference_scans, reference_points, seed, sim_out);
    }
    if (*traj_cmd) return cmd_eval_traj(est, gt, delta, period);
    if (*map_cmd) return cmd_eval_map(run_dir);
    if (*config_cmd) {
      std::cout << serialize_config(PipelineConfig{});
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "dynlo: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
