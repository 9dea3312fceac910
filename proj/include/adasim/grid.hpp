#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>

namespace adasim {

using Voxel = Eigen::Vector3i;

// Dimensions of a dense voxel grid anchored at the world origin. Voxel
// (i,j,k) spans [i*h, (i+1)*h) x ... with h = voxel_size.
struct GridDims {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  double voxel_size = 0.1;

  int count() const { return nx * ny * nz; }
  bool contains(const Voxel& v) const {
    return v.x() >= 0 && v.x() < nx && v.y() >= 0 && v.y() < ny && v.z() >= 0 && v.z() < nz;
  }
  int index(const Voxel& v) const { return (v.z() * ny + v.y()) * nx + v.x(); }
  Voxel voxel_at(int index) const {
    int x = index % nx;
    int y = (index / nx) % ny;
    int z = index / (nx * ny);
    return {x, y, z};
  }
  Voxel voxel_of(const Eigen::Vector3d& p) const {
    return {static_cast<int>(std::floor(p.x() / voxel_size)),
            static_cast<int>(std::floor(p.y() / voxel_size)),
            static_cast<int>(std::floor(p.z() / voxel_size))};
  }
  Eigen::Vector3d center_of(const Voxel& v) const {
    return {(v.x() + 0.5) * voxel_size, (v.y() + 0.5) * voxel_size, (v.z() + 0.5) * voxel_size};
  }
  bool equals(const GridDims& o) const {
    return nx == o.nx && ny == o.ny && nz == o.nz && voxel_size == o.voxel_size;
  }
};

// Walks the voxels pierced by the ray origin + t*dir for t in [0, max_range].
// The visitor is called as visit(voxel, t_entry) where t_entry is the
// distance at which the ray enters the voxel (0 for the starting voxel);
// traversal stops when the visitor returns false, the ray leaves the grid, or
// the next voxel would be entered beyond max_range.
//
// Boundary-crossing distances are recomputed from the integer boundary at
// every step rather than accumulated, so identical (origin, dir) inputs give
// crossing values that are bitwise equal to a direct evaluation of
// (boundary - origin) / dir. Axis ties step x before y before z.
template <typename Visitor>
void traverse_ray(const GridDims& g, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                  double max_range, Visitor&& visit) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Voxel v = g.voxel_of(origin);
  if (!g.contains(v)) return;

  Eigen::Vector3i step;
  for (int a = 0; a < 3; ++a) step[a] = dir[a] > 0.0 ? 1 : (dir[a] < 0.0 ? -1 : 0);

  // Distance at which the ray crosses the next boundary on each axis.
  auto next_crossing = [&](int axis) {
    if (step[axis] == 0) return inf;
    double boundary = (v[axis] + (step[axis] > 0 ? 1 : 0)) * g.voxel_size;
    return (boundary - origin[axis]) / dir[axis];
  };

  double t_entry = 0.0;
  while (true) {
    if (t_entry > max_range) return;
    if (!visit(v, t_entry)) return;

    double tx = next_crossing(0);
    double ty = next_crossing(1);
    double tz = next_crossing(2);
    int axis = 0;
    double t_next = tx;
    if (ty < t_next) {
      axis = 1;
      t_next = ty;
    }
    if (tz < t_next) {
      axis = 2;
      t_next = tz;
    }
    if (t_next == inf) return;

    v[axis] += step[axis];
    if (!g.contains(v)) return;
    t_entry = t_next;
  }
}

}  // namespace adasim
