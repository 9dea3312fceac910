#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <vector>

#include "adasim/camera.hpp"
#include "adasim/grid.hpp"
#include "adasim/render.hpp"
#include "adasim/rng.hpp"
#include "adasim/scene.hpp"
#include "adasim/semantic_map.hpp"

using namespace adasim;

namespace {

// Single-pixel pinhole with a narrow field of view: its one ray is exactly
// the pose's forward direction, so depth values can be aimed at chosen voxel
// boundaries.
CameraIntrinsics beam_camera(int width = 1, int height = 1) {
  CameraIntrinsics cam;
  cam.width = width;
  cam.height = height;
  cam.hfov = 0.2;
  return cam;
}

SensorFrame make_frame(const ViewPose& pose, const CameraIntrinsics& cam) {
  SensorFrame frame;
  frame.pose = pose;
  frame.width = cam.width;
  frame.height = cam.height;
  frame.hfov = cam.hfov;
  frame.features = Eigen::MatrixXf::Zero(4, cam.pixels());
  frame.depth = Eigen::VectorXf::Constant(cam.pixels(), kNoDepth);
  frame.gt_labels = Eigen::VectorXi::Constant(cam.pixels(), kNoLabel);
  return frame;
}

// Entry distance of the ray from `pose` through pixel (u, v) into `target`,
// recomputed with the library traversal so it matches the map's walk exactly.
double entry_distance(const GridDims& dims, const CameraIntrinsics& cam, const ViewPose& pose,
                      int u, int v, const Voxel& target) {
  const Eigen::Vector3d dir = pixel_ray(cam, pose, u, v);
  double entry = -1.0;
  traverse_ray(dims, pose.position(), dir, 100.0, [&](const Voxel& vox, double t_entry) {
    if (vox == target) {
      entry = t_entry;
      return false;
    }
    return true;
  });
  REQUIRE(entry >= 0.0);
  return entry;
}

// One-ray frame from `pose` whose measured hit is the entry into `target`.
SensorFrame beam_frame(const GridDims& dims, const ViewPose& pose, const Voxel& target, int label,
                       const CameraIntrinsics& cam) {
  SensorFrame frame = make_frame(pose, cam);
  frame.depth[0] = static_cast<float>(entry_distance(dims, cam, pose, 0, 0, target));
  frame.gt_labels[0] = label;
  return frame;
}

void integrate(SemanticVoxelMap& map, const SensorFrame& frame, double u_pred,
               double max_range = 5.0) {
  const Eigen::VectorXi labels = frame.gt_labels;
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(frame.pixels(), u_pred);
  map.integrate_frame(frame, labels, u, max_range);
}

double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 == 0.0 ? 0.0 : std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

long total_class_counts(const SemanticVoxelMap& map) {
  long total = 0;
  for (int idx = 0; idx < map.dims().count(); ++idx)
    for (int c = 0; c < map.num_classes(); ++c) total += map.class_count(idx, c);
  return total;
}

}  // namespace

TEST_CASE("construction validates lambda and starts unobserved") {
  const GridDims dims{8, 8, 4, 0.1};
  CHECK_THROWS(SemanticVoxelMap(dims, 4, -0.1));
  CHECK_THROWS(SemanticVoxelMap(dims, 4, 1.5));

  const SemanticVoxelMap map(dims, 4, 0.5);
  CHECK(map.version() == 0);
  for (int idx = 0; idx < dims.count(); ++idx) {
    CHECK(map.state(idx) == VoxelState::kUnobserved);
    CHECK(map.uncertainty(idx) == 0.0);
    CHECK(map.train_weight(idx) == 0.0);
    CHECK(!map.map_class(idx));
  }
}

TEST_CASE("one beam carves free space up to its hit and deposits the vote") {
  const GridDims dims{12, 3, 3, 0.1};
  SemanticVoxelMap map(dims, 4, 0.5);
  const ViewPose pose{0.55, 0.15, 0.15, 0.0};
  const Voxel hit{9, 1, 1};
  const SensorFrame frame = beam_frame(dims, pose, hit, 2, beam_camera());

  integrate(map, frame, 0.7);
  CHECK(map.version() == 1);

  CHECK(map.state(hit) == VoxelState::kSurface);
  CHECK(map.class_count(dims.index(hit), 2) == 1);
  CHECK(map.map_class(hit) == 2);
  CHECK(map.uncertainty(dims.index(hit)) == 0.7);  // first observation sets directly
  CHECK(map.read_voxel(dims.index(hit)).uncertainty_initialized);

  // Pass-through voxels are free, voxels behind the surface stay unknown.
  for (int x = 5; x <= 8; ++x) CHECK(map.state(Voxel{x, 1, 1}) == VoxelState::kFree);
  for (int x = 10; x < 12; ++x) CHECK(map.state(Voxel{x, 1, 1}) == VoxelState::kUnobserved);
  CHECK(map.state(Voxel{5, 0, 1}) == VoxelState::kUnobserved);
  CHECK(total_class_counts(map) == 1);
}

TEST_CASE("uncertainty fusion contracts toward the observation at rate lambda") {
  const GridDims dims{12, 3, 3, 0.1};
  const ViewPose pose{0.55, 0.15, 0.15, 0.0};
  const Voxel hit{9, 1, 1};
  const SensorFrame frame = beam_frame(dims, pose, hit, 2, beam_camera());
  const int idx = dims.index(hit);

  const double a = 0.9, c = 0.15;
  for (double lambda : {0.5, 0.25, 0.8}) {
    SemanticVoxelMap map(dims, 4, lambda);
    integrate(map, frame, a);
    REQUIRE(map.uncertainty(idx) == a);
    for (int n = 1; n <= 40; ++n) {
      integrate(map, frame, c);
      // u_n - c = lambda^n (u_0 - c): the filter is a contraction with
      // factor lambda per observation.
      const double expected = c + std::pow(lambda, n) * (a - c);
      CHECK(std::abs(map.uncertainty(idx) - expected) <= 1e-12);
    }
  }
}

TEST_CASE("pixels of one frame fuse before the filter update") {
  // Two rays of a narrow two-pixel camera land in the same voxel with
  // different uncertainties; the frame contributes their mean under average
  // fusion and the later pixel under last-pixel fusion.
  const GridDims dims{12, 3, 3, 0.1};
  const ViewPose pose{0.55, 0.15, 0.15, 0.0};
  const Voxel hit{9, 1, 1};
  const CameraIntrinsics cam = beam_camera(2, 1);

  SensorFrame frame = make_frame(pose, cam);
  for (int u = 0; u < 2; ++u) {
    frame.depth[u] = static_cast<float>(entry_distance(dims, cam, pose, u, 0, hit));
    frame.gt_labels[u] = 1;
  }
  const Eigen::VectorXd u_pred = (Eigen::VectorXd(2) << 0.2, 0.8).finished();

  SemanticVoxelMap avg(dims, 4, 0.5, FrameFusion::kAverage);
  avg.integrate_frame(frame, frame.gt_labels, u_pred, 5.0);
  CHECK(avg.state(hit) == VoxelState::kSurface);
  CHECK(avg.class_count(dims.index(hit), 1) == 2);
  CHECK(avg.uncertainty(dims.index(hit)) == doctest::Approx(0.5).epsilon(1e-12));

  SemanticVoxelMap last(dims, 4, 0.5, FrameFusion::kLastPixel);
  last.integrate_frame(frame, frame.gt_labels, u_pred, 5.0);
  CHECK(last.uncertainty(dims.index(hit)) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("class votes accumulate and ties keep the lowest id") {
  const GridDims dims{12, 3, 3, 0.1};
  SemanticVoxelMap map(dims, 4, 0.5);
  const ViewPose pose{0.55, 0.15, 0.15, 0.0};
  const Voxel hit{9, 1, 1};
  const CameraIntrinsics cam = beam_camera();

  integrate(map, beam_frame(dims, pose, hit, 2, cam), 0.5);
  CHECK(map.map_class(hit) == 2);

  integrate(map, beam_frame(dims, pose, hit, 1, cam), 0.5);
  CHECK(map.class_count(dims.index(hit), 1) == 1);
  CHECK(map.class_count(dims.index(hit), 2) == 1);
  CHECK(map.map_class(hit) == 1);  // tie resolves to the lower id

  integrate(map, beam_frame(dims, pose, hit, 2, cam), 0.5);
  CHECK(map.map_class(hit) == 2);

  // Out-of-range labels carve and fuse but cast no vote.
  SensorFrame unlabeled = beam_frame(dims, pose, hit, kNoLabel, cam);
  integrate(map, unlabeled, 0.5);
  CHECK(total_class_counts(map) == 3);
}

TEST_CASE("a deeper pass demotes a surface voxel and wipes its votes") {
  const GridDims dims{12, 3, 3, 0.1};
  SemanticVoxelMap map(dims, 4, 0.5);
  const ViewPose pose{0.55, 0.15, 0.15, 0.0};
  const CameraIntrinsics cam = beam_camera();

  integrate(map, beam_frame(dims, pose, {9, 1, 1}, 2, cam), 0.5);
  REQUIRE(map.state(Voxel{9, 1, 1}) == VoxelState::kSurface);

  // The same ray now measures a hit two voxels deeper; the old surface is
  // carved through and its accumulated votes are dropped with it.
  integrate(map, beam_frame(dims, pose, {11, 1, 1}, 3, cam), 0.5);
  CHECK(map.state(Voxel{9, 1, 1}) == VoxelState::kFree);
  CHECK(map.class_count(dims.index({9, 1, 1}), 2) == 0);
  CHECK(!map.map_class(Voxel{9, 1, 1}));
  CHECK(map.read_voxel(dims.index({9, 1, 1})).class_counts.empty());
  CHECK(map.state(Voxel{11, 1, 1}) == VoxelState::kSurface);
  CHECK(map.map_class(Voxel{11, 1, 1}) == 3);
}

TEST_CASE("no-hit rays carve to max range but never demote a surface") {
  const GridDims dims{12, 3, 3, 0.1};
  SemanticVoxelMap map(dims, 4, 0.5);
  const ViewPose pose{0.55, 0.15, 0.15, 0.0};
  const CameraIntrinsics cam = beam_camera();

  integrate(map, beam_frame(dims, pose, {9, 1, 1}, 2, cam), 0.6);

  SensorFrame miss = make_frame(pose, cam);  // depth stays kNoDepth
  integrate(map, miss, 0.0, 100.0);

  CHECK(map.state(Voxel{9, 1, 1}) == VoxelState::kSurface);
  CHECK(map.class_count(dims.index({9, 1, 1}), 2) == 1);
  // Everything else on the ray is carved free, including behind the surface.
  for (int x = 5; x < 12; ++x)
    if (x != 9) CHECK(map.state(Voxel{x, 1, 1}) == VoxelState::kFree);
}

TEST_CASE("a grazed corner inside the depth window is not promoted to a surface") {
  // The ray crosses a y boundary a hair before the x boundary of its true
  // hit, closer together than the float depth can resolve. The deposit must
  // land on the crossing nearest the recorded depth; promoting the first
  // window crossing instead would plant a phantom obstacle in free space.
  const GridDims dims{10, 10, 3, 0.1};
  const double eta = 1e-6;
  const ViewPose pose{0.05, 0.05, 0.15, std::atan2(0.45 * (1.0 + eta), 0.45)};
  const CameraIntrinsics cam = beam_camera();

  const double t_corner = entry_distance(dims, cam, pose, 0, 0, {4, 5, 1});
  const double t_hit = entry_distance(dims, cam, pose, 0, 0, {5, 5, 1});
  REQUIRE(t_hit - t_corner > 0.0);
  REQUIRE(t_hit - t_corner < 1e-5);  // both crossings sit inside the slack window

  SensorFrame frame = make_frame(pose, cam);
  frame.depth[0] = static_cast<float>(t_hit);
  frame.gt_labels[0] = 2;

  SemanticVoxelMap map(dims, 4, 0.5);
  integrate(map, frame, 0.5);
  CHECK(map.state(Voxel{5, 5, 1}) == VoxelState::kSurface);
  CHECK(map.map_class(Voxel{5, 5, 1}) == 2);
  CHECK(map.state(Voxel{4, 5, 1}) == VoxelState::kFree);
  CHECK(map.state(Voxel{4, 4, 1}) == VoxelState::kFree);
  CHECK(total_class_counts(map) == 1);

  // The training-weight walk resolves the same voxel.
  map.update_tau(frame, 1.0);
  CHECK(map.train_weight(dims.index({5, 5, 1})) == 1.0);
  CHECK(map.train_weight(dims.index({4, 5, 1})) == 0.0);
}

TEST_CASE("training weight accumulates inverse-square depth per frame") {
  const GridDims dims{12, 3, 3, 0.1};
  SemanticVoxelMap map(dims, 4, 0.5);
  const ViewPose pose{0.55, 0.15, 0.15, 0.0};
  const Voxel hit{9, 1, 1};
  const int idx = dims.index(hit);
  const SensorFrame frame = beam_frame(dims, pose, hit, 2, beam_camera());
  integrate(map, frame, 0.5);

  // Depth 0.35 clamps up to d_min = 1.
  map.update_tau(frame, 1.0);
  CHECK(map.train_weight(idx) == 1.0);
  map.update_tau(frame, 1.0);
  CHECK(map.train_weight(idx) == 2.0);

  // Below the clamp the true depth drives the weight.
  const double d = static_cast<double>(frame.depth[0]);
  map.update_tau(frame, 0.1);
  CHECK(map.train_weight(idx) == doctest::Approx(2.0 + 1.0 / (d * d)).epsilon(1e-12));

  // Two pixels into one voxel contribute once, at their closest depth.
  const CameraIntrinsics cam2 = beam_camera(2, 1);
  SensorFrame pair = make_frame(pose, cam2);
  double dmin = 1e9;
  for (int u = 0; u < 2; ++u) {
    pair.depth[u] = static_cast<float>(entry_distance(dims, cam2, pose, u, 0, hit));
    pair.gt_labels[u] = 1;
    dmin = std::min(dmin, static_cast<double>(pair.depth[u]));
  }
  SemanticVoxelMap map2(dims, 4, 0.5);
  integrate(map2, pair, 0.5);
  map2.update_tau(pair, 0.1);
  CHECK(map2.train_weight(idx) == doctest::Approx(1.0 / (dmin * dmin)).epsilon(1e-12));
}

TEST_CASE("discount is 1 for untrained voxels and decays with accumulated weight") {
  const GridDims dims{12, 3, 3, 0.1};
  SemanticVoxelMap map(dims, 4, 0.5);
  const Voxel hit{9, 1, 1};
  const int idx = dims.index(hit);

  CHECK(map.discount(idx, 0.5, 1.0) == 1.0);
  CHECK(map.discount(idx, 4.0, 1.0) == 1.0);
  CHECK_THROWS(map.discount(idx, 0.0, 1.0));
  CHECK_THROWS(map.discount(idx, -1.0, 1.0));

  const ViewPose pose{0.55, 0.15, 0.15, 0.0};
  const SensorFrame frame = beam_frame(dims, pose, hit, 2, beam_camera());
  integrate(map, frame, 0.5);
  map.update_tau(frame, 1.0);  // train_weight = 1

  // w = max(d, d_min)^-2, discount = w / (tau + w).
  CHECK(map.discount(idx, 2.0, 1.0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(map.discount(idx, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(map.discount(idx, 0.25, 1.0) == doctest::Approx(0.5).epsilon(1e-12));  // clamped

  map.update_tau(frame, 1.0);  // train_weight = 2
  CHECK(map.discount(idx, 1.0, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("carved corridors free exactly the swept voxel centers") {
  const GridDims dims{10, 10, 5, 0.1};
  SemanticVoxelMap map(dims, 4, 0.5);
  const Eigen::Vector2d a(0.55, 0.55), b(0.85, 0.55);
  const double radius = 0.1, z_min = 0.1, z_max = 0.3;
  map.carve_free_corridor(a, b, radius, z_min, z_max);

  for (int z = 0; z < dims.nz; ++z) {
    for (int y = 0; y < dims.ny; ++y) {
      for (int x = 0; x < dims.nx; ++x) {
        const Eigen::Vector2d c((x + 0.5) * 0.1, (y + 0.5) * 0.1);
        const double zc = (z + 0.5) * 0.1;
        const bool inside =
            zc >= z_min && zc <= z_max && point_segment_distance(c, a, b) <= radius;
        CHECK(map.state(Voxel{x, y, z}) ==
              (inside ? VoxelState::kFree : VoxelState::kUnobserved));
      }
    }
  }
}

TEST_CASE("carving never demotes an observed surface") {
  const GridDims dims{12, 3, 3, 0.1};
  SemanticVoxelMap map(dims, 4, 0.5);
  const ViewPose pose{0.55, 0.15, 0.15, 0.0};
  const Voxel hit{9, 1, 1};
  integrate(map, beam_frame(dims, pose, hit, 2, beam_camera()), 0.5);

  map.carve_free_cylinder(Eigen::Vector3d(0.95, 0.15, 0.0), 0.5, 0.0, 0.3);
  CHECK(map.state(hit) == VoxelState::kSurface);
  CHECK(map.class_count(dims.index(hit), 2) == 1);
  CHECK(map.state(Voxel{9, 0, 1}) == VoxelState::kFree);  // neighbors did carve
}

TEST_CASE("cylinder carve matches a zero-length corridor") {
  const GridDims dims{10, 10, 5, 0.1};
  SemanticVoxelMap cyl(dims, 4, 0.5), cor(dims, 4, 0.5);
  cyl.carve_free_cylinder(Eigen::Vector3d(0.47, 0.52, 0.0), 0.25, 0.05, 0.35);
  cor.carve_free_corridor(Eigen::Vector2d(0.47, 0.52), Eigen::Vector2d(0.47, 0.52), 0.25, 0.05,
                          0.35);
  for (int idx = 0; idx < dims.count(); ++idx) CHECK(cyl.state(idx) == cor.state(idx));
}

TEST_CASE("integrating a rendered frame reproduces the scene ahead of the camera") {
  SceneConfig cfg;
  cfg.nx = 32;
  cfg.ny = 32;
  cfg.nz = 10;
  cfg.num_objects = 4;
  cfg.max_object_xy = 5;
  cfg.max_object_z = 8;
  const SceneModel scene = generate_scene(3, cfg);
  const CameraIntrinsics cam;  // full 64x48 sensor
  const ViewPose pose = sample_test_poses(scene, 1, 11, RobotShape{}, 0.45)[0];
  const SensorFrame frame = render_frame(scene, pose, cam);

  SemanticVoxelMap map(scene.dims, cfg.num_classes, 0.5);
  map.integrate_frame(frame, frame.gt_labels, Eigen::VectorXd::Constant(frame.pixels(), 0.5),
                      cam.max_range);

  // Every valid pixel lands exactly one vote on the first occupied voxel of
  // its ray, so votes in the map match valid pixels one to one.
  long valid = 0;
  for (int pix = 0; pix < frame.pixels(); ++pix)
    if (frame.valid(pix)) ++valid;
  CHECK(total_class_counts(map) == valid);

  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      if (!frame.valid(v * frame.width + u)) continue;
      const Eigen::Vector3d dir = pixel_ray(cam, pose, u, v);
      Voxel first_hit(-1, -1, -1);
      traverse_ray(scene.dims, pose.position(), dir, cam.max_range,
                   [&](const Voxel& vox, double) {
                     if (!scene.is_occupied(vox)) return true;
                     first_hit = vox;
                     return false;
                   });
      REQUIRE(first_hit.x() >= 0);
      CHECK(map.state(first_hit) == VoxelState::kSurface);
      CHECK(map.map_class(first_hit) == scene.class_of(first_hit));
    }
  }

  // The map never hallucinates: surfaces only on occupied voxels, free space
  // only on truly empty ones.
  for (int idx = 0; idx < scene.dims.count(); ++idx) {
    if (map.state(idx) == VoxelState::kSurface) CHECK(scene.occupied[idx] == 1);
    if (map.state(idx) == VoxelState::kFree) CHECK(scene.occupied[idx] == 0);
  }
}

TEST_CASE("repeated frames stack votes linearly") {
  SceneConfig cfg;
  cfg.nx = 32;
  cfg.ny = 32;
  cfg.nz = 10;
  cfg.num_objects = 4;
  cfg.max_object_xy = 5;
  cfg.max_object_z = 8;
  const SceneModel scene = generate_scene(3, cfg);
  const CameraIntrinsics cam;
  const ViewPose pose = sample_test_poses(scene, 1, 11, RobotShape{}, 0.45)[0];
  const SensorFrame frame = render_frame(scene, pose, cam);

  SemanticVoxelMap map(scene.dims, cfg.num_classes, 0.5);
  long valid = 0;
  for (int pix = 0; pix < frame.pixels(); ++pix)
    if (frame.valid(pix)) ++valid;

  for (int n = 1; n <= 5; ++n) {
    map.integrate_frame(frame, frame.gt_labels, Eigen::VectorXd::Constant(frame.pixels(), 0.5),
                        cam.max_range);
    CHECK(total_class_counts(map) == n * valid);
  }
}

TEST_CASE("map export lists every observed voxel") {
  const GridDims dims{12, 3, 3, 0.1};
  SemanticVoxelMap map(dims, 4, 0.5);
  const ViewPose pose{0.55, 0.15, 0.15, 0.0};
  const SensorFrame frame = beam_frame(dims, pose, {9, 1, 1}, 2, beam_camera());
  integrate(map, frame, 0.25);
  map.update_tau(frame, 1.0);

  const std::string path = "/tmp/adasim_test_map.txt";
  map.export_text(path);

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "adasim-map v1");
  std::getline(in, line);
  CHECK(line == "dims 12 3 3 0.1");
  std::getline(in, line);
  CHECK(line == "index state class uncertainty train_weight");

  int free_rows = 0, surface_rows = 0;
  while (std::getline(in, line)) {
    int idx, cls;
    char state[16];
    double unc, tw;
    REQUIRE(std::sscanf(line.c_str(), "%d %15s %d %lf %lf", &idx, state, &cls, &unc, &tw) == 5);
    if (std::string(state) == "surface") {
      ++surface_rows;
      CHECK(idx == dims.index({9, 1, 1}));
      CHECK(cls == 2);
      CHECK(unc == doctest::Approx(0.25));
      CHECK(tw == doctest::Approx(1.0));
    } else {
      ++free_rows;
      CHECK(cls == -1);
    }
  }
  CHECK(surface_rows == 1);
  CHECK(free_rows == 4);  // the four carved pass-through voxels
  std::remove(path.c_str());
}

TEST_CASE("version advances with every write") {
  const GridDims dims{12, 3, 3, 0.1};
  SemanticVoxelMap map(dims, 4, 0.5);
  const ViewPose pose{0.55, 0.15, 0.15, 0.0};
  const SensorFrame frame = beam_frame(dims, pose, {9, 1, 1}, 2, beam_camera());

  integrate(map, frame, 0.5);
  CHECK(map.version() == 1);
  map.update_tau(frame, 1.0);
  CHECK(map.version() == 2);
  map.carve_free_cylinder(Eigen::Vector3d(0.55, 0.15, 0.0), 0.2, 0.0, 0.3);
  CHECK(map.version() == 3);
  map.carve_free_corridor(Eigen::Vector2d(0.55, 0.15), Eigen::Vector2d(0.75, 0.15), 0.2, 0.0,
                          0.3);
  CHECK(map.version() == 4);
}
