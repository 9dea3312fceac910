#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "adasim/scene.hpp"
#include "adasim/seg_model.hpp"
#include "adasim/semantic_map.hpp"

namespace adasim {

// Rows are ground truth, columns are predictions.
using ConfusionMatrix = Eigen::Matrix<int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// Adds every pixel where both labels are valid class ids; everything else
// (no-hit pixels, ignore labels) is skipped.
void accumulate_confusion(ConfusionMatrix& cm, const Eigen::VectorXi& gt,
                          const Eigen::VectorXi& pred);

// Per-class intersection-over-union. Classes without ground-truth pixels are
// excluded: valid[c] = false and class_iou[c] = NaN, and they do not enter
// the mean.
struct IouReport {
  Eigen::VectorXd class_iou;
  std::vector<char> valid;
  double miou = 0.0;
};

IouReport iou_from_confusion(const ConfusionMatrix& cm);

// Predicts every test frame and scores against its ground-truth labels.
IouReport evaluate_model(const SegModel& model, const std::vector<SensorFrame>& test_frames);

// Mean per-class IoU change, grouped by the starting (pretrained) IoU.
struct IouBin {
  double lo = 0.0;  // bin covers (lo, hi]; the first bin includes lo
  double hi = 0.0;
  int count = 0;
  double mean_delta = 0.0;
};

// Bins classes by `before` IoU at the given edges (default bins: <= 0.3,
// (0.3, 0.5], > 0.5) and averages after - before per bin. Classes that are
// NaN in either report are skipped; empty bins are omitted, not zero.
std::vector<IouBin> group_improvement(const Eigen::VectorXd& before, const Eigen::VectorXd& after,
                                      const std::vector<double>& edges = {0.3, 0.5});

// Fraction of reachable ground-truth surface voxels the map has marked as
// surface. Reachable free space is the 6-connected flood fill of ground-truth
// free voxels from the start pose; a surface voxel is an occupied voxel
// adjacent to that region.
double surface_coverage(const SceneModel& scene, const SemanticVoxelMap& map,
                        const ViewPose& start);

}  // namespace adasim
