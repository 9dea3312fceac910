#pragma once

#include <Eigen/Core>
#include <cmath>

#include "adasim/pose.hpp"

namespace adasim {

// Pinhole camera with square pixels. The horizontal field of view fixes the
// focal length; the vertical field of view follows from the aspect ratio.
struct CameraIntrinsics {
  int width = 64;
  int height = 48;
  double hfov = M_PI / 2.0;  // radians
  double max_range = 5.0;    // meters

  double focal() const { return (width * 0.5) / std::tan(hfov * 0.5); }
  int pixels() const { return width * height; }

  // Same frustum sampled at a coarser resolution (planner gain rays). The
  // vertical extent matches only if w/h preserves the aspect ratio.
  CameraIntrinsics subsampled(int w, int h) const {
    CameraIntrinsics c = *this;
    c.width = w;
    c.height = h;
    return c;
  }
};

// Unit ray direction of pixel (u, v) for a camera at `pose`. The camera
// looks along +forward, u grows to the right, v grows downwards.
inline Eigen::Vector3d pixel_ray(const CameraIntrinsics& cam, const ViewPose& pose, int u, int v) {
  const double f = cam.focal();
  const double tan_x = (u + 0.5 - cam.width * 0.5) / f;
  const double tan_y = (v + 0.5 - cam.height * 0.5) / f;
  const Eigen::Vector3d fwd(std::cos(pose.yaw), std::sin(pose.yaw), 0.0);
  const Eigen::Vector3d right(std::sin(pose.yaw), -std::cos(pose.yaw), 0.0);
  const Eigen::Vector3d down(0.0, 0.0, -1.0);
  return (fwd + tan_x * right + tan_y * down).normalized();
}

}  // namespace adasim
