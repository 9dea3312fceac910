#include "adasim/metrics.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace adasim {

void accumulate_confusion(ConfusionMatrix& cm, const Eigen::VectorXi& gt,
                          const Eigen::VectorXi& pred) {
  if (gt.size() != pred.size())
    throw std::invalid_argument("confusion: label vectors differ in length");
  const int k = static_cast<int>(cm.rows());
  for (Eigen::Index i = 0; i < gt.size(); ++i) {
    const int g = gt[i];
    const int p = pred[i];
    if (g < 0 || g >= k || p < 0 || p >= k) continue;
    ++cm(g, p);
  }
}

IouReport iou_from_confusion(const ConfusionMatrix& cm) {
  const int k = static_cast<int>(cm.rows());
  IouReport rep;
  rep.class_iou = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
  rep.valid.assign(k, 0);
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < k; ++c) {
    const int64_t gt_pixels = cm.row(c).sum();
    if (gt_pixels == 0) continue;  // class absent from the test set
    const int64_t tp = cm(c, c);
    const int64_t fp = cm.col(c).sum() - tp;
    const int64_t fn = gt_pixels - tp;
    rep.class_iou[c] = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    rep.valid[c] = 1;
    sum += rep.class_iou[c];
    ++counted;
  }
  rep.miou = counted > 0 ? sum / counted : 0.0;
  return rep;
}

IouReport evaluate_model(const SegModel& model, const std::vector<SensorFrame>& test_frames) {
  const int k = model.num_classes();
  ConfusionMatrix cm = ConfusionMatrix::Zero(k, k);
  for (const SensorFrame& frame : test_frames) {
    const Prediction pred = predict(model, frame);
    accumulate_confusion(cm, frame.gt_labels, pred.labels);
  }
  return iou_from_confusion(cm);
}

std::vector<IouBin> group_improvement(const Eigen::VectorXd& before, const Eigen::VectorXd& after,
                                      const std::vector<double>& edges) {
  if (before.size() != after.size())
    throw std::invalid_argument("group_improvement: class count mismatch");
  std::vector<IouBin> bins;
  for (size_t b = 0; b < edges.size() + 1; ++b) {
    IouBin bin;
    bin.lo = b == 0 ? 0.0 : edges[b - 1];
    bin.hi = b < edges.size() ? edges[b] : 1.0;
    bins.push_back(bin);
  }
  for (Eigen::Index c = 0; c < before.size(); ++c) {
    if (std::isnan(before[c]) || std::isnan(after[c])) continue;
    size_t b = 0;
    while (b < edges.size() && before[c] > edges[b]) ++b;
    bins[b].mean_delta += after[c] - before[c];
    ++bins[b].count;
  }
  std::vector<IouBin> filled;
  for (IouBin& bin : bins) {
    if (bin.count == 0) continue;  // empty bins are absent, not zero
    bin.mean_delta /= bin.count;
    filled.push_back(bin);
  }
  return filled;
}

double surface_coverage(const SceneModel& scene, const SemanticVoxelMap& map,
                        const ViewPose& start) {
  const GridDims& dims = scene.dims;
  if (!map.dims().equals(dims)) throw std::invalid_argument("coverage: grid mismatch");
  const Voxel s = dims.voxel_of(start.position());
  if (!dims.contains(s) || scene.occupied[dims.index(s)])
    throw std::invalid_argument("coverage: start pose is not in free space");

  // Flood-fill ground-truth free space from the start voxel.
  std::vector<char> reachable(dims.count(), 0);
  std::deque<Voxel> queue{s};
  reachable[dims.index(s)] = 1;
  const Voxel steps[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  while (!queue.empty()) {
    const Voxel v = queue.front();
    queue.pop_front();
    for (const Voxel& d : steps) {
      const Voxel n = v + d;
      if (!dims.contains(n)) continue;
      const int idx = dims.index(n);
      if (reachable[idx] || scene.occupied[idx]) continue;
      reachable[idx] = 1;
      queue.push_back(n);
    }
  }

  int64_t total = 0, observed = 0;
  for (int idx = 0; idx < dims.count(); ++idx) {
    if (!scene.occupied[idx]) continue;
    const Voxel v = dims.voxel_at(idx);
    bool exposed = false;
    for (const Voxel& d : steps) {
      const Voxel n = v + d;
      if (dims.contains(n) && reachable[dims.index(n)]) {
        exposed = true;
        break;
      }
    }
    if (!exposed) continue;
    ++total;
    if (map.state(idx) == VoxelState::kSurface) ++observed;
  }
  return total == 0 ? 1.0 : static_cast<double>(observed) / static_cast<double>(total);
}

}  // namespace adasim
