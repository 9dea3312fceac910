#include "adasim/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "adasim/collision.hpp"

namespace adasim {

const char* to_string(Supervision mode) {
  switch (mode) {
    case Supervision::kMapRaycast: return "map_raycast";
    case Supervision::kMapDepthLookup: return "map_depth_lookup";
    case Supervision::kSelfTraining: return "self_training";
  }
  return "map_raycast";
}

Supervision parse_supervision(const std::string& name) {
  if (name == "map_raycast") return Supervision::kMapRaycast;
  if (name == "map_depth_lookup") return Supervision::kMapDepthLookup;
  if (name == "self_training") return Supervision::kSelfTraining;
  throw std::invalid_argument("unknown supervision mode: " + name);
}

Eigen::VectorXi render_pseudo_labels(const SemanticVoxelMap& map, const SensorFrame& frame,
                                     Supervision mode, const SegModel* model) {
  if (mode == Supervision::kSelfTraining) {
    if (model == nullptr)
      throw std::invalid_argument("self-training pseudo labels need the model");
    return predict(*model, frame).labels;
  }

  Eigen::VectorXi labels = Eigen::VectorXi::Constant(frame.pixels(), kNoLabel);
  const GridDims& dims = map.dims();
  const CameraIntrinsics cam = frame.intrinsics();
  const Eigen::Vector3d origin = frame.pose.position();

  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      const int pix = v * frame.width + u;
      if (!frame.valid(pix)) continue;
      const Eigen::Vector3d dir = pixel_ray(cam, frame.pose, u, v);

      if (mode == Supervision::kMapDepthLookup) {
        // Land the pixel just past the entry face of its measured hit voxel.
        const Eigen::Vector3d p = origin + dir * (frame.depth[pix] + 0.5 * dims.voxel_size);
        const Voxel vox = dims.voxel_of(p);
        if (!dims.contains(vox)) continue;
        if (auto cls = map.map_class(vox)) labels[pix] = *cls;
        continue;
      }

      // Raycast mode: the first non-free voxel decides. A surface voxel
      // yields its majority class; an unobserved voxel blocks the ray with
      // no label.
      traverse_ray(dims, origin, dir, cam.max_range, [&](const Voxel& vox, double) {
        switch (map.state(vox)) {
          case VoxelState::kSurface:
            labels[pix] = map.map_class(vox).value();
            return false;
          case VoxelState::kUnobserved:
            return false;
          case VoxelState::kFree:
            return true;
        }
        return true;
      });
    }
  }
  return labels;
}

namespace {

// Keeps only the labeled pixels of a frame.
FramePixels extract_pixels(const SensorFrame& frame, const Eigen::VectorXi& labels, bool replay) {
  const int n = static_cast<int>((labels.array() >= 0).count());
  FramePixels out;
  out.replay = replay;
  out.features.resize(frame.features.rows(), n);
  out.labels.resize(n);
  int j = 0;
  for (int pix = 0; pix < frame.pixels(); ++pix) {
    if (labels[pix] < 0) continue;
    out.features.col(j) = frame.features.col(pix);
    out.labels[j] = labels[pix];
    ++j;
  }
  return out;
}

void append_val_pixels(const SensorFrame& frame, const Eigen::VectorXi& labels,
                       std::vector<Eigen::VectorXf>& feats, std::vector<int>& labs) {
  for (int pix = 0; pix < frame.pixels(); ++pix) {
    if (labels[pix] < 0) continue;
    feats.push_back(frame.features.col(pix));
    labs.push_back(labels[pix]);
  }
}

}  // namespace

TrainingSet assemble_training_set(const std::vector<SensorFrame>& target_frames,
                                  const std::vector<SensorFrame>& source_corpus,
                                  const SemanticVoxelMap& map, const SegModel& model,
                                  const TrainConfig& config, uint64_t seed) {
  const int n = static_cast<int>(target_frames.size());
  if (n < 2) throw std::invalid_argument("assemble_training_set: need at least two target frames");
  Rng rng = make_rng(seed, "assemble");

  // Hold out val_fraction of the target frames (at least one, never all).
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  int n_val = static_cast<int>(std::lround(config.val_fraction * n));
  n_val = std::clamp(n_val, 1, n - 1);

  TrainingSet set;
  set.target_frames = n;
  std::vector<Eigen::VectorXf> val_feats;
  std::vector<int> val_labs;
  for (int i = 0; i < n; ++i) {
    const SensorFrame& frame = target_frames[order[i]];
    const Eigen::VectorXi labels = render_pseudo_labels(map, frame, config.supervision, &model);
    if (i < n_val) {
      append_val_pixels(frame, labels, val_feats, val_labs);
    } else {
      FramePixels fp = extract_pixels(frame, labels, false);
      if (fp.labels.size() > 0) set.train.push_back(std::move(fp));
    }
  }

  int n_replay = static_cast<int>(std::lround(config.replay_fraction * n));
  n_replay = std::min<int>(n_replay, static_cast<int>(source_corpus.size()));
  if (n_replay > 0) {
    std::vector<int> pick(source_corpus.size());
    std::iota(pick.begin(), pick.end(), 0);
    std::shuffle(pick.begin(), pick.end(), rng);
    for (int i = 0; i < n_replay; ++i) {
      const SensorFrame& frame = source_corpus[pick[i]];
      FramePixels fp = extract_pixels(frame, frame.gt_labels, true);
      if (fp.labels.size() > 0) set.train.push_back(std::move(fp));
    }
  }
  set.replay_frames = n_replay;

  set.val_features.resize(model.feature_dim(), static_cast<Eigen::Index>(val_feats.size()));
  set.val_labels.resize(static_cast<Eigen::Index>(val_labs.size()));
  for (size_t i = 0; i < val_feats.size(); ++i) {
    set.val_features.col(static_cast<Eigen::Index>(i)) = val_feats[i].cast<double>();
    set.val_labels[static_cast<Eigen::Index>(i)] = val_labs[i];
  }
  return set;
}

namespace {

// Re-fits the density estimator and normalizer on a random subset of the
// training latents, classed by the model's own predictions.
void refit_estimator(SegModel& model, const TrainingSet& data, const TrainConfig& config,
                     Rng& rng) {
  const long total = data.train_pixels();
  if (total == 0) return;
  const long want = std::min<long>(config.refit_samples, total);

  std::vector<long> order(total);
  std::iota(order.begin(), order.end(), 0L);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(want);
  std::sort(order.begin(), order.end());

  // Frame-block offsets let global pixel ids map back to columns.
  Eigen::MatrixXd feats(model.feature_dim(), want);
  long base = 0;
  size_t frame_idx = 0;
  long cursor = 0;
  for (long k = 0; k < want; ++k) {
    const long id = order[k];
    while (base + data.train[frame_idx].labels.size() <= id) {
      base += data.train[frame_idx].labels.size();
      ++frame_idx;
    }
    feats.col(cursor++) = data.train[frame_idx].features.col(id - base).cast<double>();
  }

  const Prediction pred = predict_features(model, feats);
  fit_estimator(model, pred.latents, pred.labels, config.pca_dim);
  fit_normalizer(model, estimate_uncertainty(model, pred.latents));
}

}  // namespace

TrainCycleResult train_cycle(const SegModel& model, const TrainingSet& data,
                             const TrainConfig& config, uint64_t seed) {
  TrainCycleResult result;
  result.model = model;
  const long total = data.train_pixels();
  if (total == 0) {
    std::cerr << "train_cycle: no labeled training pixels, cycle aborted\n";
    result.aborted = true;
    return result;
  }
  Rng rng = make_rng(seed, "train");

  const bool have_val = data.val_labels.size() > 0;
  if (!have_val && config.epochs > 0)
    std::cerr << "train_cycle: empty validation set, early stopping disabled\n";

  SegModel current = model;
  double best_val = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
  std::bernoulli_distribution flip(0.5);
  std::vector<std::pair<int, int>> pool;  // (train frame, column)
  pool.reserve(total);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    // Per-frame horizontal flip, then a global pixel shuffle. For a
    // per-pixel model a flip only permutes the frame's columns, so its whole
    // effect is on batch composition.
    pool.clear();
    for (size_t f = 0; f < data.train.size(); ++f) {
      const int n = static_cast<int>(data.train[f].labels.size());
      if (flip(rng))
        for (int c = n - 1; c >= 0; --c) pool.emplace_back(static_cast<int>(f), c);
      else
        for (int c = 0; c < n; ++c) pool.emplace_back(static_cast<int>(f), c);
    }
    std::shuffle(pool.begin(), pool.end(), rng);

    double loss_sum = 0.0;
    for (long start = 0; start < total; start += config.batch_pixels) {
      const long b = std::min<long>(config.batch_pixels, total - start);
      Eigen::MatrixXd feats(current.feature_dim(), b);
      Eigen::VectorXi labels(b);
      for (long i = 0; i < b; ++i) {
        const auto& [f, c] = pool[start + i];
        feats.col(i) = data.train[f].features.col(c).cast<double>();
        labels[i] = data.train[f].labels[c];
      }
      loss_sum += train_step(current, feats, labels, config.lr_latent, config.lr_head) * b;
    }

    EpochLog row;
    row.epoch = epoch;
    row.train_loss = loss_sum / total;
    row.val_loss = have_val ? cross_entropy(current, data.val_features, data.val_labels)
                            : row.train_loss;
    row.improved = row.val_loss < best_val;
    result.log.push_back(row);
    result.epochs_run = epoch;

    if (row.improved) {
      best_val = row.val_loss;
      result.model = current;
      bad_epochs = 0;
    } else if (++bad_epochs > config.patience) {
      result.stopped_early = true;
      break;
    }
  }
  result.best_val_loss = std::isinf(best_val) ? std::numeric_limits<double>::quiet_NaN() : best_val;

  refit_estimator(result.model, data, config, rng);
  return result;
}

void write_training_log(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write training log: " + path);
  out << "cycle,epoch,train_loss,val_loss,improved\n";
  char buf[160];
  for (const EpochLog& row : log) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.9g,%.9g,%d\n", row.cycle, row.epoch, row.train_loss,
                  row.val_loss, row.improved ? 1 : 0);
    out << buf;
  }
}

SegModel pretrain_model(const std::vector<SensorFrame>& source_corpus, int latent_dim,
                        int num_classes, const TrainConfig& config, uint64_t seed,
                        std::vector<EpochLog>* log) {
  if (source_corpus.size() < 2)
    throw std::invalid_argument("pretrain_model: need at least two source frames");
  const int feature_dim = static_cast<int>(source_corpus[0].features.rows());
  SegModel model = make_seg_model(feature_dim, latent_dim, num_classes,
                                  derive_seed(seed, "model-init"));

  // Same assembly as a learning cycle, with ground-truth supervision and no
  // replay on top of an already fully supervised set.
  Rng rng = make_rng(seed, "pretrain-split");
  const int n = static_cast<int>(source_corpus.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  int n_val = std::clamp(static_cast<int>(std::lround(config.val_fraction * n)), 1, n - 1);

  TrainingSet set;
  set.target_frames = n;
  std::vector<Eigen::VectorXf> val_feats;
  std::vector<int> val_labs;
  for (int i = 0; i < n; ++i) {
    const SensorFrame& frame = source_corpus[order[i]];
    if (i < n_val) {
      append_val_pixels(frame, frame.gt_labels, val_feats, val_labs);
    } else {
      FramePixels fp = extract_pixels(frame, frame.gt_labels, false);
      if (fp.labels.size() > 0) set.train.push_back(std::move(fp));
    }
  }
  set.val_features.resize(feature_dim, static_cast<Eigen::Index>(val_feats.size()));
  set.val_labels.resize(static_cast<Eigen::Index>(val_labs.size()));
  for (size_t i = 0; i < val_feats.size(); ++i) {
    set.val_features.col(static_cast<Eigen::Index>(i)) = val_feats[i].cast<double>();
    set.val_labels[static_cast<Eigen::Index>(i)] = val_labs[i];
  }

  TrainCycleResult result = train_cycle(model, set, config, derive_seed(seed, "pretrain"));
  if (result.aborted) throw std::runtime_error("pretrain_model: empty training set");
  if (log) *log = result.log;
  return result.model;
}

namespace {

// After this many consecutive ticks without a move the planner is starved:
// every sampled pose or edge collides in the map, and the camera may not be
// able to re-observe the blocking voxels from the current pose. An in-place
// rotation collects a usable frame without driving through unchecked space.
constexpr int kStarvedTicks = 64;
// Successive recovery rotations step by the golden angle so repeated
// recoveries sweep distinct viewing directions.
constexpr double kRecoveryYaw = 2.399963229728653;

}  // namespace

MissionResult run_adaptation(const SceneModel& scene, const SegModel& pretrained,
                             const std::vector<SensorFrame>& source_corpus,
                             const std::vector<SensorFrame>& test_frames,
                             const MissionConfig& config) {
  if (!pretrained.estimator_fitted)
    throw std::invalid_argument("run_adaptation: pretrained model has no fitted estimator");

  MissionResult result;
  result.model = pretrained;
  result.view_counts.assign(scene.dims.count(), 0);

  Rng planner_rng = make_rng(config.seed, "planner");
  Rng noise_rng = make_rng(config.seed, "obs-noise");

  // The start pose is sampled with the bootstrap radius as clearance so the
  // carved cylinder below is certainly free in the ground truth.
  RobotShape start_clearance = config.robot;
  start_clearance.radius = std::max(config.robot.radius, config.bootstrap_radius);
  const ViewPose start = sample_test_poses(scene, 1, derive_seed(config.seed, "start-pose"),
                                           start_clearance, config.camera_height)[0];
  result.start_pose = start;

  SemanticVoxelMap map(scene.dims, scene.config.num_classes, config.lambda);
  map.carve_free_cylinder(start.position(), config.bootstrap_radius, config.robot.z_min,
                          config.robot.z_max);
  ViewTree tree = make_tree(start);
  ViewPose pose = start;

  std::vector<SensorFrame> bundle_frames;
  long tick_count = 0;

  auto collect = [&](double gain) {
    SensorFrame frame = render_frame(scene, pose, config.camera, config.noise_std, noise_rng,
                                     static_cast<int64_t>(bundle_frames.size()));
    const Prediction pred = predict(result.model, frame);
    const Eigen::VectorXd u_raw = estimate_uncertainty(result.model, pred.latents);
    const Eigen::VectorXd u_pred = normalize_uncertainty(result.model, u_raw);
    map.integrate_frame(frame, pred.labels, u_pred, config.camera.max_range);
    map.update_tau(frame, config.planner.gain.d_min);
    add_view_counts(scene.dims, frame, result.view_counts);
    result.trajectory.push_back({tick_count, pose, gain, config.planner.gain.mode});
    if (!config.frame_dump_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof(name), "/frame_%05zu.ppm", bundle_frames.size());
      write_frame_ppm(frame, config.frame_dump_dir + name);
    }
    bundle_frames.push_back(std::move(frame));
  };

  auto do_move = [&](int node, double gain) -> bool {
    const ViewPose target = tree.nodes[node].pose;
    if (!check_path(scene, pose, target, config.robot)) {
      // Should be unreachable: edges are collision-checked in the map, and
      // map free space is carved only from observations of truly free
      // voxels. Counted so acceptance can assert it never fires.
      ++result.safety_violations;
      reset_tree(tree, pose);
      return false;
    }
    // The drive itself certifies the swept corridor as free space.
    map.carve_free_corridor(Eigen::Vector2d(pose.x, pose.y), Eigen::Vector2d(target.x, target.y),
                            config.robot.radius, config.robot.z_min, config.robot.z_max);
    pose = target;
    advance_root(tree, node);
    collect(gain);
    return true;
  };

  // Pretrained baseline before any collection.
  {
    CycleRecord rec;
    rec.cycle = 0;
    rec.iou = evaluate_model(result.model, test_frames);
    rec.coverage = surface_coverage(scene, map, start);
    result.records.push_back(rec);
  }

  auto map_blocked = [&map](const Voxel& v) { return map.state(v) != VoxelState::kFree; };
  long frames_total = 0;

  for (int cycle = 1; cycle <= config.cycles; ++cycle) {
    int cycle_frames = 0;
    long cycle_ticks = 0;
    if (cycle == 1) {
      // In-place scan: start-pose views in several directions, so the first
      // planned edges lead through corridors the map already knows are free.
      const int spin = std::min(4, config.train.bundle_size);
      for (int k = 0; k < spin; ++k) {
        pose.yaw = wrap_angle(start.yaw + k * (2.0 * M_PI / std::max(spin, 1)));
        collect(0.0);
        ++cycle_frames;
      }
      reset_tree(tree, pose);
    }

    int fruitless = 0;
    while (cycle_frames < config.train.bundle_size) {
      if (++cycle_ticks > config.max_ticks_per_cycle)
        throw std::runtime_error("run_adaptation: planner made no progress for a whole cycle");
      ++tick_count;

      if (fruitless >= kStarvedTicks) {
        pose.yaw = wrap_angle(pose.yaw + kRecoveryYaw);
        collect(0.0);
        ++cycle_frames;
        reset_tree(tree, pose);
        fruitless = 0;
        continue;
      }

      TickResult tick = planner_tick(map, tree, config.camera, config.robot, config.planner,
                                     planner_rng);
      int node = -1;
      if (tick.action == TickAction::kMove) {
        node = tick.next;
      } else if (tick.action == TickAction::kExhausted) {
        // Nothing informative left under this gain; keep collecting like the
        // random baseline so the bundle still fills.
        const int leaf = pick_random_leaf(tree, planner_rng);
        if (leaf >= 0) {
          const int next = first_edge_toward(tree, leaf);
          if (check_path(map.dims(), map_blocked, tree.nodes[0].pose, tree.nodes[next].pose,
                         config.robot))
            node = next;
        }
      }
      // On kStuck the tree was reset; try again with fresh samples.

      if (node >= 0 && do_move(node, tree.nodes[node].gain)) {
        ++cycle_frames;
        fruitless = 0;
      } else {
        ++fruitless;
      }
    }
    frames_total += cycle_frames;

    const uint64_t cycle_seed = derive_seed(config.seed, "cycle", static_cast<uint64_t>(cycle));
    TrainingSet data = assemble_training_set(bundle_frames, source_corpus, map, result.model,
                                             config.train, cycle_seed);
    TrainCycleResult trained = train_cycle(result.model, data, config.train, cycle_seed);
    if (!trained.aborted) result.model = trained.model;
    for (EpochLog row : trained.log) {
      row.cycle = cycle;
      result.train_log.push_back(row);
    }

    CycleRecord rec;
    rec.cycle = cycle;
    rec.iou = evaluate_model(result.model, test_frames);
    rec.coverage = surface_coverage(scene, map, start);
    rec.frames_collected = frames_total;
    rec.ticks = tick_count;
    rec.train_loss = trained.log.empty() ? 0.0 : trained.log.back().train_loss;
    rec.val_loss = trained.best_val_loss;
    rec.epochs_run = trained.epochs_run;
    rec.stopped_early = trained.stopped_early;
    rec.train_aborted = trained.aborted;
    result.records.push_back(rec);
    result.checkpoints.push_back(result.model);
  }

  result.map = std::move(map);
  return result;
}

}  // namespace adasim
