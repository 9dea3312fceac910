#pragma once

#include <Eigen/Core>
#include <functional>

#include "adasim/grid.hpp"
#include "adasim/pose.hpp"
#include "adasim/scene.hpp"

namespace adasim {

// Predicate telling whether a voxel blocks robot motion. Ground-truth checks
// block on occupied voxels; online checks against a reconstructed map block
// on anything not known to be free.
using BlockedFn = std::function<bool(const Voxel&)>;

// True iff the straight XY segment from `from` to `to`, dilated by the robot
// radius, stays clear: no blocked voxel whose center lies within the robot's
// z-band has an XY center-to-segment distance <= radius.
bool check_path(const GridDims& dims, const BlockedFn& blocked, const ViewPose& from,
                const ViewPose& to, const RobotShape& robot);

// Ground-truth variant used by the simulator and oracle tests.
bool check_path(const SceneModel& scene, const ViewPose& from, const ViewPose& to,
                const RobotShape& robot);

// Distance from point p to segment [a, b] in the XY plane.
double xy_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                           const Eigen::Vector2d& b);

}  // namespace adasim
