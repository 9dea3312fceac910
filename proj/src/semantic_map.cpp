#include "adasim/semantic_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "adasim/camera.hpp"
#include "adasim/collision.hpp"

namespace adasim {

namespace {

// Frame depth is stored in float, so the crossing at the true hit can sit up
// to one float ulp (~5e-7 at full range) on either side of the recorded
// depth. The slack window must swallow that quantization while staying far
// below the tightest spacing that separates crossings on one axis.
constexpr double kDepthSlack = 1e-5;

// Walks a ray to its measured depth, reporting every pass-through voxel to
// `free_voxel`, and returns the index of the voxel the depth refers to (-1
// when the depth lands outside the grid). Within the slack window the
// crossing nearest to the depth is the surface; a grazed corner can put an
// earlier crossing inside the window, and taking the first one instead would
// plant a phantom surface in free space. Crossings on one axis are a whole
// voxel apart, so at most one per axis (three total) can fit in the window.
template <typename FreeFn>
int resolve_hit(const GridDims& dims, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                double depth, FreeFn&& free_voxel) {
  int hit = -1;
  double hit_err = std::numeric_limits<double>::infinity();
  int passed[3];
  int n_passed = 0;
  traverse_ray(dims, origin, dir, depth + dims.voxel_size,
               [&](const Voxel& vox, double t_entry) {
                 if (t_entry > depth + kDepthSlack) return false;
                 const int idx = dims.index(vox);
                 if (t_entry < depth - kDepthSlack) {
                   free_voxel(idx);
                   return true;
                 }
                 const double err = std::abs(t_entry - depth);
                 if (err < hit_err) {
                   if (hit >= 0 && n_passed < 3) passed[n_passed++] = hit;
                   hit_err = err;
                   hit = idx;
                 }
                 return true;
               });
  for (int i = 0; i < n_passed; ++i) free_voxel(passed[i]);
  return hit;
}

}  // namespace

SemanticVoxelMap::SemanticVoxelMap(const GridDims& dims, int num_classes, double lambda,
                                   FrameFusion fusion)
    : dims_(dims), num_classes_(num_classes), lambda_(lambda), fusion_(fusion) {
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda outside [0,1]");
  const int n = dims.count();
  states_.assign(n, static_cast<uint8_t>(VoxelState::kUnobserved));
  uncertainty_.assign(n, 0.0);
  train_weight_.assign(n, 0.0);
  unc_init_.assign(n, 0);
  counts_.assign(static_cast<size_t>(n) * num_classes, 0);
}

MapVoxel SemanticVoxelMap::read_voxel(int index) const {
  MapVoxel v;
  v.state = state(index);
  v.uncertainty = uncertainty_[index];
  v.train_weight = train_weight_[index];
  v.uncertainty_initialized = unc_init_[index] != 0;
  if (v.state == VoxelState::kSurface)
    v.class_counts.assign(counts_.begin() + static_cast<size_t>(index) * num_classes_,
                          counts_.begin() + static_cast<size_t>(index + 1) * num_classes_);
  return v;
}

std::optional<int> SemanticVoxelMap::map_class(int index) const {
  if (state(index) != VoxelState::kSurface) return std::nullopt;
  const uint32_t* row = counts_.data() + static_cast<size_t>(index) * num_classes_;
  int best = 0;
  for (int c = 1; c < num_classes_; ++c)
    if (row[c] > row[best]) best = c;  // strict: ties keep the lowest id
  return best;
}

void SemanticVoxelMap::set_free(int index) {
  // Last-write-wins between free and surface; a surface voxel demoted to free
  // drops its class counts (state != surface implies empty counts).
  if (state(index) == VoxelState::kSurface)
    std::fill_n(counts_.begin() + static_cast<size_t>(index) * num_classes_, num_classes_, 0u);
  states_[index] = static_cast<uint8_t>(VoxelState::kFree);
}

void SemanticVoxelMap::set_surface(int index) {
  states_[index] = static_cast<uint8_t>(VoxelState::kSurface);
}

void SemanticVoxelMap::integrate_frame(const SensorFrame& frame, const Eigen::VectorXi& labels,
                                       const Eigen::VectorXd& u_pred, double max_range) {
  if (labels.size() != frame.pixels() || u_pred.size() != frame.pixels())
    throw std::invalid_argument("integrate_frame: label/uncertainty size mismatch");
  const Eigen::Vector3d origin = frame.pose.position();
  const CameraIntrinsics cam = frame.intrinsics();

  // Per-voxel accumulation of this frame's hits before the filter update.
  struct Hit {
    double u_sum = 0.0;
    double u_last = 0.0;
    int count = 0;
  };
  std::unordered_map<int, Hit> hits;

  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      const int pix = v * frame.width + u;
      const Eigen::Vector3d dir = pixel_ray(cam, frame.pose, u, v);
      if (frame.valid(pix)) {
        const int hit_index =
            resolve_hit(dims_, origin, dir, frame.depth[pix], [&](int idx) { set_free(idx); });
        if (hit_index < 0) continue;  // depth landed outside the grid
        set_surface(hit_index);
        if (labels[pix] >= 0 && labels[pix] < num_classes_)
          ++counts_[static_cast<size_t>(hit_index) * num_classes_ + labels[pix]];
        Hit& h = hits[hit_index];
        h.u_sum += u_pred[pix];
        h.u_last = u_pred[pix];
        ++h.count;
      } else {
        traverse_ray(dims_, origin, dir, max_range, [&](const Voxel& vox, double) {
          const int idx = dims_.index(vox);
          if (state(idx) != VoxelState::kSurface) set_free(idx);
          return true;
        });
      }
    }
  }

  for (const auto& [index, hit] : hits) {
    const double u_obs = fusion_ == FrameFusion::kAverage ? hit.u_sum / hit.count : hit.u_last;
    if (!unc_init_[index]) {
      uncertainty_[index] = u_obs;
      unc_init_[index] = 1;
    } else {
      uncertainty_[index] = lambda_ * uncertainty_[index] + (1.0 - lambda_) * u_obs;
    }
  }
  ++version_;
}

void SemanticVoxelMap::update_tau(const SensorFrame& frame, double d_min) {
  const Eigen::Vector3d origin = frame.pose.position();
  const CameraIntrinsics cam = frame.intrinsics();

  // Closest hit per voxel within this frame; one tau contribution per voxel.
  std::unordered_map<int, double> min_depth;
  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      const int pix = v * frame.width + u;
      if (!frame.valid(pix)) continue;
      const double depth = frame.depth[pix];
      const Eigen::Vector3d dir = pixel_ray(cam, frame.pose, u, v);
      const int hit_index = resolve_hit(dims_, origin, dir, depth, [](int) {});
      if (hit_index < 0) continue;
      auto [it, inserted] = min_depth.try_emplace(hit_index, depth);
      if (!inserted) it->second = std::min(it->second, depth);
    }
  }
  for (const auto& [index, depth] : min_depth) {
    const double d = std::max(depth, d_min);
    train_weight_[index] += 1.0 / (d * d);
  }
  ++version_;
}

double SemanticVoxelMap::discount(int index, double depth, double d_min) const {
  if (depth <= 0.0) throw std::invalid_argument("discount: depth must be positive");
  const double d = std::max(depth, d_min);
  const double w = 1.0 / (d * d);
  return w / (train_weight_[index] + w);
}

void SemanticVoxelMap::carve_free_cylinder(const Eigen::Vector3d& center, double radius,
                                           double z_min, double z_max) {
  carve_free_corridor(center.head<2>(), center.head<2>(), radius, z_min, z_max);
}

void SemanticVoxelMap::carve_free_corridor(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                           double radius, double z_min, double z_max) {
  const double h = dims_.voxel_size;
  const int x0 = std::max(0, static_cast<int>(std::floor((std::min(a.x(), b.x()) - radius) / h)));
  const int x1 =
      std::min(dims_.nx - 1, static_cast<int>(std::floor((std::max(a.x(), b.x()) + radius) / h)));
  const int y0 = std::max(0, static_cast<int>(std::floor((std::min(a.y(), b.y()) - radius) / h)));
  const int y1 =
      std::min(dims_.ny - 1, static_cast<int>(std::floor((std::max(a.y(), b.y()) + radius) / h)));
  for (int z = 0; z < dims_.nz; ++z) {
    const double zc = (z + 0.5) * h;
    if (zc < z_min || zc > z_max) continue;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const Eigen::Vector2d c((x + 0.5) * h, (y + 0.5) * h);
        if (xy_segment_distance(c, a, b) > radius) continue;
        const int idx = dims_.index({x, y, z});
        if (state(idx) == VoxelState::kUnobserved) set_free(idx);
      }
  }
  ++version_;
}

void SemanticVoxelMap::export_text(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write map export: " + path);
  out << "adasim-map v1\n";
  out << "dims " << dims_.nx << " " << dims_.ny << " " << dims_.nz << " " << dims_.voxel_size
      << "\n";
  out << "index state class uncertainty train_weight\n";
  for (int idx = 0; idx < dims_.count(); ++idx) {
    if (state(idx) == VoxelState::kUnobserved) continue;
    const auto cls = map_class(idx);
    out << idx << " " << (state(idx) == VoxelState::kFree ? "free" : "surface") << " "
        << (cls ? *cls : -1) << " " << uncertainty_[idx] << " " << train_weight_[idx] << "\n";
  }
}

}  // namespace adasim
