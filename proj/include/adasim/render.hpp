#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "adasim/camera.hpp"
#include "adasim/rng.hpp"
#include "adasim/scene.hpp"

namespace adasim {

constexpr float kNoDepth = -1.0f;
constexpr int kNoLabel = -1;

// One camera observation. Pixels are stored row-major (index = v*width + u);
// features are one column per pixel. Pixels whose ray left the grid or
// exceeded max range carry kNoDepth / kNoLabel and a zero feature column.
struct SensorFrame {
  ViewPose pose;
  int width = 0;
  int height = 0;
  double hfov = M_PI / 2.0;  // ray directions are reconstructible from the frame
  Eigen::MatrixXf features;   // F x (width*height)
  Eigen::VectorXf depth;      // meters, kNoDepth where no surface was hit
  Eigen::VectorXi gt_labels;  // kNoLabel where no surface was hit
  int64_t timestamp = 0;

  int pixels() const { return width * height; }
  bool valid(int pix) const { return depth[pix] > 0.0f; }
  CameraIntrinsics intrinsics() const {
    CameraIntrinsics c;
    c.width = width;
    c.height = height;
    c.hfov = hfov;
    return c;
  }
};

// Ray-casts every pixel through the scene grid (first occupied voxel within
// max range). Depth is the Euclidean distance at which the ray enters the hit
// voxel; the pixel feature is the voxel feature plus N(0, noise_std^2) noise
// drawn from rng. A pure function of (scene, pose, cam, noise draw).
SensorFrame render_frame(const SceneModel& scene, const ViewPose& pose,
                         const CameraIntrinsics& cam, double noise_std, Rng& rng,
                         int64_t timestamp = 0);

// Zero-noise convenience overload.
SensorFrame render_frame(const SceneModel& scene, const ViewPose& pose,
                         const CameraIntrinsics& cam);

// Mirrors a frame about its vertical axis (features, depth, labels).
SensorFrame flip_horizontal(const SensorFrame& frame);

// False-color dump of the first three feature channels as a binary PPM.
void write_frame_ppm(const SensorFrame& frame, const std::string& path);

}  // namespace adasim
