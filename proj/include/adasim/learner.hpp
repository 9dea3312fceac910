#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "adasim/metrics.hpp"
#include "adasim/planner.hpp"
#include "adasim/scene.hpp"
#include "adasim/seg_model.hpp"
#include "adasim/semantic_map.hpp"

namespace adasim {

// Where training labels for collected frames come from: re-rendered from the
// semantic map by raycasting, looked up at the measured depth, or taken from
// the model's own predictions.
enum class Supervision { kMapRaycast, kMapDepthLookup, kSelfTraining };

const char* to_string(Supervision mode);
Supervision parse_supervision(const std::string& name);

struct TrainConfig {
  int bundle_size = 150;          // frames collected per learning cycle
  int epochs = 15;
  double lr_latent = 0.01;
  double lr_head = 0.05;
  double replay_fraction = 0.3;   // source frames per target frame in training
  double val_fraction = 0.1;      // target frames held out for early stopping
  int patience = 3;               // non-improving epochs tolerated
  Supervision supervision = Supervision::kMapRaycast;
  int batch_pixels = 4096;
  int refit_samples = 50000;      // latent subset for the estimator re-fit
  int pca_dim = 6;
};

// Per-pixel training labels for one frame; kNoLabel marks ignored pixels.
// Raycast mode walks each pixel ray through the map and takes the majority
// class of the first surface voxel (unobserved blocks the ray unlabeled);
// depth-lookup mode lands each pixel at its measured depth and labels from
// the voxel it falls into; self-training mode copies the model's prediction.
// Pixels without a depth return are always ignored. The model may be null
// except in self-training mode.
Eigen::VectorXi render_pseudo_labels(const SemanticVoxelMap& map, const SensorFrame& frame,
                                     Supervision mode, const SegModel* model = nullptr);

// Labeled pixels of one frame, features column-per-pixel with ignored pixels
// already dropped.
struct FramePixels {
  Eigen::MatrixXf features;  // F x n
  Eigen::VectorXi labels;    // n
  bool replay = false;
};

struct TrainingSet {
  std::vector<FramePixels> train;  // target train frames then replay frames
  Eigen::MatrixXd val_features;    // F x n_val, held-out pseudo-labeled pixels
  Eigen::VectorXi val_labels;
  int target_frames = 0;
  int replay_frames = 0;

  long train_pixels() const {
    long n = 0;
    for (const FramePixels& f : train) n += f.labels.size();
    return n;
  }
};

// Recomputes pseudo labels for every collected frame from the current map,
// holds out val_fraction of the target frames (at least one) for validation,
// and mixes in round(replay_fraction * target frames) source frames with
// their ground-truth labels. Deterministic given the seed; requires at least
// two target frames.
TrainingSet assemble_training_set(const std::vector<SensorFrame>& target_frames,
                                  const std::vector<SensorFrame>& source_corpus,
                                  const SemanticVoxelMap& map, const SegModel& model,
                                  const TrainConfig& config, uint64_t seed);

struct EpochLog {
  int cycle = 0;
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool improved = false;
};

struct TrainCycleResult {
  SegModel model;
  std::vector<EpochLog> log;
  bool aborted = false;        // no labeled training pixels; model unchanged
  bool stopped_early = false;
  double best_val_loss = 0.0;
  int epochs_run = 0;
};

// Up to config.epochs passes over the shuffled labeled pixels (mini-batches
// of batch_pixels, per-frame horizontal flips), keeping the snapshot with the
// lowest validation cross-entropy and stopping after patience non-improving
// epochs. Afterwards the density estimator and the uncertainty normalizer
// are re-fit on a random subset of training latents under the returned
// model's own predicted classes. With epochs = 0 only the re-fit runs.
TrainCycleResult train_cycle(const SegModel& model, const TrainingSet& data,
                             const TrainConfig& config, uint64_t seed);

// Writes "cycle,epoch,train_loss,val_loss,improved" rows.
void write_training_log(const std::string& path, const std::vector<EpochLog>& log);

// Source-domain pretraining: supervised training on the corpus's ground-truth
// labels with the same loop (val split, early stopping, estimator fit).
SegModel pretrain_model(const std::vector<SensorFrame>& source_corpus, int latent_dim,
                        int num_classes, const TrainConfig& config, uint64_t seed,
                        std::vector<EpochLog>* log = nullptr);

struct MissionConfig {
  CameraIntrinsics camera;
  RobotShape robot;
  PlannerParams planner;
  TrainConfig train;
  int cycles = 3;
  double lambda = 0.5;            // map uncertainty filter weight
  double noise_std = 0.65;         // per-channel observation feature noise
  double camera_height = 0.8;
  double bootstrap_radius = 1.0;  // known-free cylinder carved at the start pose
  long max_ticks_per_cycle = 15000;
  uint64_t seed = 0;
  std::string frame_dump_dir;  // when set, every collected frame is dumped as PPM
};

struct CycleRecord {
  int cycle = 0;  // 0 is the pretrained baseline
  IouReport iou;
  double coverage = 0.0;
  long frames_collected = 0;  // cumulative
  long ticks = 0;             // cumulative
  double train_loss = 0.0;
  double val_loss = 0.0;
  int epochs_run = 0;
  bool stopped_early = false;
  bool train_aborted = false;
};

struct MissionResult {
  SegModel model;
  SemanticVoxelMap map;  // final reconstructed map
  std::vector<SegModel> checkpoints;  // one per completed cycle
  std::vector<CycleRecord> records;   // cycle 0 .. cycles
  std::vector<TrajectoryRow> trajectory;
  std::vector<EpochLog> train_log;
  std::vector<int> view_counts;  // per-voxel observation counts (heat map)
  ViewPose start_pose;
  long safety_violations = 0;  // executed segments that intersect ground truth
};

// The closed loop: plan and collect until the bundle is full, halt, retrain
// on map-rendered pseudo labels, publish the new model to the planner, and
// repeat for config.cycles learning cycles. Evaluates on the fixed test
// frames after every cycle (cycle 0 = pretrained baseline).
MissionResult run_adaptation(const SceneModel& scene, const SegModel& pretrained,
                             const std::vector<SensorFrame>& source_corpus,
                             const std::vector<SensorFrame>& test_frames,
                             const MissionConfig& config);

}  // namespace adasim
