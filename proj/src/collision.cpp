#include "adasim/collision.hpp"

#include <algorithm>
#include <cmath>

namespace adasim {

double xy_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                           const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  double t = (p - a).dot(ab) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

bool check_path(const GridDims& dims, const BlockedFn& blocked, const ViewPose& from,
                const ViewPose& to, const RobotShape& robot) {
  const double h = dims.voxel_size;
  const Eigen::Vector2d a(from.x, from.y);
  const Eigen::Vector2d b(to.x, to.y);

  // Candidate voxels: axis-aligned bounding box of the dilated segment.
  const double r = robot.radius + h;  // slack for voxel-center rounding
  const int x0 = std::max(0, static_cast<int>(std::floor((std::min(a.x(), b.x()) - r) / h)));
  const int x1 = std::min(dims.nx - 1, static_cast<int>(std::floor((std::max(a.x(), b.x()) + r) / h)));
  const int y0 = std::max(0, static_cast<int>(std::floor((std::min(a.y(), b.y()) - r) / h)));
  const int y1 = std::min(dims.ny - 1, static_cast<int>(std::floor((std::max(a.y(), b.y()) + r) / h)));
  const int z0 = std::max(0, static_cast<int>(std::floor(robot.z_min / h)));
  const int z1 = std::min(dims.nz - 1, static_cast<int>(std::floor(robot.z_max / h)));

  for (int z = z0; z <= z1; ++z) {
    const double zc = (z + 0.5) * h;
    if (zc < robot.z_min || zc > robot.z_max) continue;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Voxel v(x, y, z);
        if (!blocked(v)) continue;
        const Eigen::Vector2d c((x + 0.5) * h, (y + 0.5) * h);
        if (xy_segment_distance(c, a, b) <= robot.radius) return false;
      }
    }
  }
  return true;
}

bool check_path(const SceneModel& scene, const ViewPose& from, const ViewPose& to,
                const RobotShape& robot) {
  return check_path(
      scene.dims, [&scene](const Voxel& v) { return scene.is_occupied(v); }, from, to, robot);
}

}  // namespace adasim
