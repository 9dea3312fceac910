#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adasim/learner.hpp"
#include "adasim/metrics.hpp"
#include "adasim/scene.hpp"

namespace adasim {

// Everything one experiment needs: a scene, a camera/robot, the planner and
// training knobs shared by all methods, the gain modes to compare, and the
// seed list. Methods within one experiment differ only in the gain mode.
struct ExperimentConfig {
  std::string name = "default";
  std::string output_dir = "out/default";

  uint64_t scene_seed = 42;
  SceneConfig scene;             // target domain
  uint64_t source_scene_seed = 7;
  int source_corpus_frames = 500;

  CameraIntrinsics camera;
  RobotShape robot;
  PlannerParams planner;
  TrainConfig train;
  int pretrain_epochs = 40;

  std::vector<GainMode> methods = {GainMode::kCuriosity, GainMode::kExploration,
                                   GainMode::kRandom};
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  int cycles = 3;
  int latent_dim = 12;
  int test_pose_count = 120;
  double noise_std = 0.65;
  double lambda = 0.5;
  double camera_height = 0.8;
  double bootstrap_radius = 1.0;
  bool archive_bundles = false;  // dump every collected frame as PPM
};

ExperimentConfig load_experiment_config(const std::string& path);
void save_experiment_config(const ExperimentConfig& config, const std::string& path);

// One metrics.csv row.
struct MetricRow {
  std::string method;
  uint64_t seed = 0;
  int cycle = 0;
  double miou = 0.0;
  double coverage = 0.0;
  long frames = 0;
  double val_loss = 0.0;
  int epochs_run = 0;
  Eigen::VectorXd class_iou;  // NaN where the class was absent from the test set
};

// "# adasim-metrics v1" header line, then a CSV header, then one row per
// (method, seed, cycle). Rows contain no wall-clock data, so re-running the
// same config reproduces the file byte for byte (timings go to a separate
// file).
void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metrics_csv(const std::string& path);

struct ExperimentResult {
  std::vector<MetricRow> rows;
  std::vector<std::string> failures;  // "method seed: error"
};

// Runs every (method, seed) combination sequentially: generates the scenes,
// renders the shared source corpus and test frames, pretrains one model per
// seed, runs the adaptation mission per method, and writes metrics, logs,
// checkpoints, plots, and a summary under config.output_dir. Crashed runs
// are recorded and skipped; callers should exit nonzero if failures remain.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Regenerates plots and the summary from an output directory's metrics.csv
// (plus heat maps for runs whose view-count files are present).
void plot_experiment(const std::string& output_dir);

}  // namespace adasim
