#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adasim/grid.hpp"
#include "adasim/render.hpp"

namespace adasim {

enum class VoxelState : uint8_t { kUnobserved = 0, kFree = 1, kSurface = 2 };

// Value snapshot of one map voxel (storage is struct-of-arrays).
struct MapVoxel {
  VoxelState state = VoxelState::kUnobserved;
  std::vector<uint32_t> class_counts;  // K entries for surface voxels, empty otherwise
  double uncertainty = 0.0;            // fused per-voxel uncertainty in [0, 1]
  double train_weight = 0.0;           // accumulated observation weight of training frames
  bool uncertainty_initialized = false;
};

// How multiple pixels of one frame that land in the same voxel combine before
// the exponential-filter update.
enum class FrameFusion { kAverage, kLastPixel };

// Uncertainty-aware semantic voxel map. Single writer; readers take a const
// reference and must not overlap integrate/update calls (the mission loop is
// sequential, so snapshots are simply the map between writes).
class SemanticVoxelMap {
 public:
  SemanticVoxelMap() = default;
  SemanticVoxelMap(const GridDims& dims, int num_classes, double lambda,
                   FrameFusion fusion = FrameFusion::kAverage);

  const GridDims& dims() const { return dims_; }
  int num_classes() const { return num_classes_; }
  double lambda() const { return lambda_; }
  uint64_t version() const { return version_; }

  VoxelState state(int index) const { return static_cast<VoxelState>(states_[index]); }
  VoxelState state(const Voxel& v) const { return state(dims_.index(v)); }
  double uncertainty(int index) const { return uncertainty_[index]; }
  double train_weight(int index) const { return train_weight_[index]; }
  uint32_t class_count(int index, int cls) const { return counts_[index * num_classes_ + cls]; }

  MapVoxel read_voxel(int index) const;

  // Highest-count class of a surface voxel (lowest id wins ties), or nullopt.
  std::optional<int> map_class(int index) const;
  std::optional<int> map_class(const Voxel& v) const { return map_class(dims_.index(v)); }

  // Fuses one observation: rays carve free space up to their hit (or max
  // range for no-hit rays), hit voxels become surface, the predicted class
  // count increments, and the voxel uncertainty follows
  //   u <- lambda * u + (1 - lambda) * u_pred
  // with the first-ever observation setting u = u_pred directly.
  void integrate_frame(const SensorFrame& frame, const Eigen::VectorXi& labels,
                       const Eigen::VectorXd& u_pred, double max_range);

  // Accounts a frame that entered the training bundle: every surface voxel it
  // observes at depth d (closest hit per voxel) accumulates max(d, d_min)^-2.
  void update_tau(const SensorFrame& frame, double d_min);

  // Expected-impact discount of observing voxel v at depth d:
  //   w / (train_weight + w) with w = max(d, d_min)^-2. 1 for voxels that no
  // training frame has observed; decays toward 0 as observations accumulate.
  double discount(int index, double depth, double d_min) const;


  // Marks a vertical cylinder of known-free space (mission bootstrap at the
  // start pose; the robot's own body certifies the space as free).
  void carve_free_cylinder(const Eigen::Vector3d& center, double radius, double z_min,
                           double z_max);

  // Marks the corridor swept by a robot that drove from a to b as known-free:
  // every voxel whose center lies within radius of the segment in the XY
  // plane and whose center height is inside [z_min, z_max]. Matches the voxel
  // set a collision check of the same segment inspects, so a traversed path
  // stays traversable in the map. Never demotes surface voxels.
  void carve_free_corridor(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double radius,
                           double z_min, double z_max);

  // Structured text export: one row per observed voxel with state, argmax
  // class, uncertainty, and accumulated training weight.
  void export_text(const std::string& path) const;

 private:
  void set_free(int index);
  void set_surface(int index);

  GridDims dims_;
  int num_classes_ = 0;
  double lambda_ = 0.5;
  FrameFusion fusion_ = FrameFusion::kAverage;
  uint64_t version_ = 0;
  std::vector<uint8_t> states_;
  std::vector<double> uncertainty_;
  std::vector<double> train_weight_;
  std::vector<uint8_t> unc_init_;
  std::vector<uint32_t> counts_;
};

}  // namespace adasim
