#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "adasim/grid.hpp"
#include "adasim/pose.hpp"
#include "adasim/rng.hpp"

namespace adasim {

enum class Domain { kSource, kTarget };

// Parameters of the synthetic box-world generator. Class 0 is the floor,
// class 1 the walls, classes 2..num_classes-1 are object classes. The last
// num_shifted_classes ids get a strong additive mean shift between the source
// and target domain.
struct SceneConfig {
  int nx = 64;
  int ny = 64;
  int nz = 16;
  double voxel_size = 0.1;
  int num_classes = 8;
  int feature_dim = 12;
  int num_objects = 10;
  int min_object_xy = 3;  // object footprint, in voxels
  int max_object_xy = 8;
  int min_object_z = 4;
  int max_object_z = 12;
  int object_clearance = 4;  // free voxels kept between objects and walls
  int num_shifted_classes = 3;
  double shift_magnitude = 2.4;
  double sigma_feat = 0.05;       // per-voxel appearance spread around the class mean
  double mean_scale = 1.0;       // class means drawn from N(0, mean_scale^2 I)
  uint64_t class_seed = 29;    // seeds the class means (shared between domains)
  Domain domain = Domain::kTarget;
};

// Per-class appearance statistics in both domains. Columns are classes.
struct ClassParams {
  Eigen::MatrixXd source_means;  // F x K
  Eigen::MatrixXd target_means;  // F x K
  double sigma_feat = 0.05;
  std::vector<int> shifted_classes;

  const Eigen::MatrixXd& means(Domain d) const {
    return d == Domain::kSource ? source_means : target_means;
  }
};

// Ground-truth voxel world. Appearance features are drawn once per occupied
// voxel at generation and never change, so any two views of a voxel observe
// the same underlying feature.
struct SceneModel {
  GridDims dims;
  SceneConfig config;
  ClassParams class_params;
  std::vector<uint8_t> occupied;   // dims.count()
  std::vector<int16_t> class_ids;  // -1 for free voxels
  Eigen::MatrixXf features;        // F x dims.count(), zero columns for free voxels

  bool is_occupied(const Voxel& v) const { return occupied[dims.index(v)] != 0; }
  int class_of(const Voxel& v) const { return class_ids[dims.index(v)]; }
};

// Builds a deterministic scene: floor, perimeter walls, and axis-aligned box
// objects of distinct classes, with per-voxel features drawn from the class
// distribution of config.domain. Throws std::runtime_error if the objects
// cannot be placed with the required clearance.
SceneModel generate_scene(uint64_t seed, const SceneConfig& config);

// Robot body model: a vertical cylinder from z_min to z_max. The floor layer
// sits below z_min so it never collides.
struct RobotShape {
  double radius = 0.15;
  double z_min = 0.1;
  double z_max = 0.8;
};

// True iff pose is collision-free against the ground-truth scene.
bool pose_in_free_space(const SceneModel& scene, const ViewPose& pose, const RobotShape& robot);

// n collision-free poses, uniform over free space and yaw. Throws after a
// bounded number of rejection attempts if free space is too small.
std::vector<ViewPose> sample_test_poses(const SceneModel& scene, int n, uint64_t seed,
                                        const RobotShape& robot, double camera_height);

// Structured text persistence (versioned header, run-length class payload,
// class-parameter table, hex-float features). Round-trips bit-exactly.
void save_scene(const SceneModel& scene, const std::string& path);
SceneModel load_scene(const std::string& path);

}  // namespace adasim
