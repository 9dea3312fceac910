#include "adasim/render.hpp"

#include <algorithm>
#include <fstream>

#include "adasim/grid.hpp"

namespace adasim {

SensorFrame render_frame(const SceneModel& scene, const ViewPose& pose,
                         const CameraIntrinsics& cam, double noise_std, Rng& rng,
                         int64_t timestamp) {
  SensorFrame frame;
  frame.pose = pose;
  frame.width = cam.width;
  frame.height = cam.height;
  frame.hfov = cam.hfov;
  frame.timestamp = timestamp;
  const int n = cam.pixels();
  const int F = scene.config.feature_dim;
  frame.features = Eigen::MatrixXf::Zero(F, n);
  frame.depth = Eigen::VectorXf::Constant(n, kNoDepth);
  frame.gt_labels = Eigen::VectorXi::Constant(n, kNoLabel);

  const Eigen::Vector3d origin = pose.position();
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const int pix = v * cam.width + u;
      const Eigen::Vector3d dir = pixel_ray(cam, pose, u, v);
      int hit_index = -1;
      double hit_t = 0.0;
      traverse_ray(scene.dims, origin, dir, cam.max_range,
                   [&](const Voxel& vox, double t_entry) {
                     const int idx = scene.dims.index(vox);
                     if (scene.occupied[idx]) {
                       hit_index = idx;
                       hit_t = t_entry;
                       return false;
                     }
                     return true;
                   });
      if (hit_index < 0) continue;
      frame.depth[pix] = static_cast<float>(hit_t);
      frame.gt_labels[pix] = scene.class_ids[hit_index];
      frame.features.col(pix) = scene.features.col(hit_index);
      if (noise_std > 0.0)
        for (int f = 0; f < F; ++f)
          frame.features(f, pix) += static_cast<float>(noise_std * gauss(rng));
    }
  }
  return frame;
}

SensorFrame render_frame(const SceneModel& scene, const ViewPose& pose,
                         const CameraIntrinsics& cam) {
  Rng rng(0);
  return render_frame(scene, pose, cam, 0.0, rng);
}

SensorFrame flip_horizontal(const SensorFrame& frame) {
  SensorFrame out = frame;
  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      const int src = v * frame.width + u;
      const int dst = v * frame.width + (frame.width - 1 - u);
      out.features.col(dst) = frame.features.col(src);
      out.depth[dst] = frame.depth[src];
      out.gt_labels[dst] = frame.gt_labels[src];
    }
  }
  return out;
}

void write_frame_ppm(const SensorFrame& frame, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write ppm: " + path);
  out << "P6\n" << frame.width << " " << frame.height << "\n255\n";
  // Map the first three feature channels through a fixed affine range.
  float lo = 0.0f, hi = 1.0f;
  if (frame.features.size() > 0) {
    lo = frame.features.minCoeff();
    hi = std::max(frame.features.maxCoeff(), lo + 1e-6f);
  }
  for (int pix = 0; pix < frame.pixels(); ++pix) {
    for (int ch = 0; ch < 3; ++ch) {
      unsigned char byte = 0;
      if (frame.valid(pix)) {
        const float val = ch < frame.features.rows() ? frame.features(ch, pix) : 0.0f;
        byte = static_cast<unsigned char>(std::clamp((val - lo) / (hi - lo), 0.0f, 1.0f) * 255.0f);
      }
      out.put(static_cast<char>(byte));
    }
  }
}

}  // namespace adasim
