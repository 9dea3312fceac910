#pragma once

#include <Eigen/Core>
#include <cmath>

namespace adasim {

// Wraps an angle to [-pi, pi).
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * M_PI;
  a = std::fmod(a + M_PI, two_pi);
  if (a < 0.0) a += two_pi;
  return a - M_PI;
}

// Camera / robot pose for a planar robot: free x, y, yaw; z is the fixed
// sensor height.
struct ViewPose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;  // radians in [-pi, pi)

  Eigen::Vector3d position() const { return {x, y, z}; }
  Eigen::Vector3d forward() const { return {std::cos(yaw), std::sin(yaw), 0.0}; }

  bool operator==(const ViewPose& o) const {
    return x == o.x && y == o.y && z == o.z && yaw == o.yaw;
  }
};

inline double yaw_distance(double a, double b) { return std::abs(wrap_angle(a - b)); }

}  // namespace adasim
