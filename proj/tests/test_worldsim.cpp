#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <set>
#include <vector>

#include "adasim/camera.hpp"
#include "adasim/collision.hpp"
#include "adasim/grid.hpp"
#include "adasim/render.hpp"
#include "adasim/rng.hpp"
#include "adasim/scene.hpp"

using namespace adasim;

namespace {

SceneConfig tiny_config() {
  SceneConfig cfg;
  cfg.nx = 32;
  cfg.ny = 32;
  cfg.nz = 10;
  cfg.num_objects = 4;
  cfg.max_object_xy = 5;
  cfg.max_object_z = 8;
  return cfg;
}

// Hand-built empty-shell scene: no floor, no walls, fully free unless the
// caller marks voxels. All features zero.
SceneModel empty_scene(int nx, int ny, int nz, int feature_dim = 4) {
  SceneModel scene;
  scene.dims = {nx, ny, nz, 0.1};
  scene.config.nx = nx;
  scene.config.ny = ny;
  scene.config.nz = nz;
  scene.config.feature_dim = feature_dim;
  scene.occupied.assign(scene.dims.count(), 0);
  scene.class_ids.assign(scene.dims.count(), -1);
  scene.features = Eigen::MatrixXf::Zero(feature_dim, scene.dims.count());
  return scene;
}

void mark(SceneModel& scene, int x, int y, int z, int cls) {
  const int idx = scene.dims.index({x, y, z});
  scene.occupied[idx] = 1;
  scene.class_ids[idx] = static_cast<int16_t>(cls);
}

}  // namespace

TEST_CASE("scene generation is deterministic and structured") {
  const SceneConfig cfg = tiny_config();
  const SceneModel a = generate_scene(1, cfg);
  const SceneModel b = generate_scene(1, cfg);

  CHECK(a.occupied == b.occupied);
  CHECK(a.class_ids == b.class_ids);
  CHECK(a.features == b.features);
  CHECK(a.class_params.source_means == b.class_params.source_means);
  CHECK(a.class_params.target_means == b.class_params.target_means);

  const SceneModel c = generate_scene(2, cfg);
  CHECK(a.class_ids != c.class_ids);  // layout moves with the seed

  int objects = 0;
  for (int z = 0; z < cfg.nz; ++z) {
    for (int y = 0; y < cfg.ny; ++y) {
      for (int x = 0; x < cfg.nx; ++x) {
        const int idx = a.dims.index({x, y, z});
        const bool perimeter = x == 0 || x == cfg.nx - 1 || y == 0 || y == cfg.ny - 1;
        if (a.occupied[idx]) {
          const int cls = a.class_ids[idx];
          CHECK(cls >= 0);
          CHECK(cls < cfg.num_classes);
          if (cls == 0) CHECK(z == 0);          // floor only in the bottom layer
          if (cls == 1) CHECK(perimeter);       // walls only on the perimeter
          if (cls >= 2) {
            CHECK(!perimeter);
            CHECK(z >= 1);
            ++objects;
          }
          CHECK(a.features.col(idx).norm() > 0.0);
        } else {
          CHECK(a.class_ids[idx] == -1);
          CHECK(a.features.col(idx).isZero());
        }
      }
    }
  }
  CHECK(objects > 0);
}

TEST_CASE("zero objects leaves only floor and walls") {
  SceneConfig cfg = tiny_config();
  cfg.num_objects = 0;
  const SceneModel scene = generate_scene(3, cfg);
  for (int z = 1; z < cfg.nz; ++z)
    for (int y = 1; y < cfg.ny - 1; ++y)
      for (int x = 1; x < cfg.nx - 1; ++x) CHECK(!scene.is_occupied({x, y, z}));
}

TEST_CASE("zero shift magnitude keeps both domains identical") {
  SceneConfig cfg = tiny_config();
  cfg.shift_magnitude = 0.0;
  const SceneModel scene = generate_scene(4, cfg);
  CHECK(scene.class_params.source_means == scene.class_params.target_means);
}

TEST_CASE("shifted classes move by the configured magnitude, others stay") {
  const SceneConfig cfg = tiny_config();
  const SceneModel scene = generate_scene(5, cfg);
  const ClassParams& p = scene.class_params;
  CHECK(static_cast<int>(p.shifted_classes.size()) == cfg.num_shifted_classes);
  for (int c = 0; c < cfg.num_classes; ++c) {
    const double moved = (p.target_means.col(c) - p.source_means.col(c)).norm();
    const bool shifted = std::find(p.shifted_classes.begin(), p.shifted_classes.end(), c) !=
                         p.shifted_classes.end();
    if (shifted) {
      CHECK(c >= 2);  // floor and walls never shift
      CHECK(moved == doctest::Approx(cfg.shift_magnitude).epsilon(1e-9));
    } else {
      CHECK(moved == 0.0);
    }
  }
}

TEST_CASE("per-voxel features follow the configured domain's class means") {
  SceneConfig cfg = tiny_config();
  cfg.sigma_feat = 0.02;
  SceneConfig src_cfg = cfg;
  src_cfg.domain = Domain::kSource;
  const SceneModel target = generate_scene(6, cfg);
  const SceneModel source = generate_scene(6, src_cfg);
  CHECK(target.class_ids == source.class_ids);  // same seed, same layout

  // Mean feature of each class's voxels lands near the domain mean.
  for (const SceneModel* scene : {&target, &source}) {
    const Eigen::MatrixXd& means = scene->class_params.means(scene->config.domain);
    for (int cls = 0; cls < cfg.num_classes; ++cls) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(cfg.feature_dim);
      int n = 0;
      for (int idx = 0; idx < scene->dims.count(); ++idx) {
        if (scene->class_ids[idx] != cls) continue;
        sum += scene->features.col(idx).cast<double>();
        ++n;
      }
      if (n < 30) continue;
      const double err = (sum / n - means.col(cls)).norm();
      CHECK(err < 5.0 * cfg.sigma_feat);
    }
  }
}

TEST_CASE("ray traversal matches a dense point-sampling oracle") {
  const GridDims g{8, 8, 8, 0.1};
  Rng rng(1234);
  std::uniform_real_distribution<double> upos(0.05, 0.75);
  std::normal_distribution<double> udir(0.0, 1.0);

  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector3d origin(upos(rng), upos(rng), upos(rng));
    Eigen::Vector3d dir(udir(rng), udir(rng), udir(rng));
    if (dir.norm() < 1e-6) continue;
    dir.normalize();
    const double max_range = 1.5;

    std::vector<Voxel> visited;
    std::vector<double> entries;
    traverse_ray(g, origin, dir, max_range, [&](const Voxel& v, double t) {
      visited.push_back(v);
      entries.push_back(t);
      return true;
    });
    REQUIRE(!visited.empty());

    // Oracle: gather every axis boundary crossing analytically, then probe
    // the voxel at the midpoint of each interval between crossings.
    std::vector<double> events{0.0, max_range};
    for (int a = 0; a < 3; ++a) {
      if (dir[a] == 0.0) continue;
      for (int b = 0; b <= 8; ++b) {
        const double t = (b * g.voxel_size - origin[a]) / dir[a];
        if (t > 0.0 && t < max_range) events.push_back(t);
      }
    }
    std::sort(events.begin(), events.end());
    std::vector<Voxel> oracle;
    for (size_t i = 0; i + 1 < events.size(); ++i) {
      const double mid = 0.5 * (events[i] + events[i + 1]);
      const Voxel v = g.voxel_of(origin + mid * dir);
      if (!g.contains(v)) break;
      if (oracle.empty() || oracle.back() != v) oracle.push_back(v);
    }
    REQUIRE(visited.size() == oracle.size());
    for (size_t i = 0; i < visited.size(); ++i) CHECK(visited[i] == oracle[i]);

    // Entry distances are exactly the axis boundary crossings.
    CHECK(entries[0] == 0.0);
    for (size_t i = 1; i < visited.size(); ++i) {
      int axis = -1;
      for (int a = 0; a < 3; ++a)
        if (visited[i][a] != visited[i - 1][a]) axis = a;
      REQUIRE(axis >= 0);
      const bool forward = visited[i][axis] > visited[i - 1][axis];
      const double boundary = (visited[i][axis] + (forward ? 0 : 1)) * g.voxel_size;
      CHECK(entries[i] == (boundary - origin[axis]) / dir[axis]);  // bitwise
      CHECK(entries[i] > entries[i - 1]);
    }
    CHECK(entries.back() <= max_range);
  }
}

TEST_CASE("rendered depth, label, and feature match a per-ray oracle") {
  const SceneModel scene = generate_scene(7, tiny_config());
  CameraIntrinsics cam;
  cam.width = 32;
  cam.height = 24;
  const ViewPose pose = sample_test_poses(scene, 1, 5, RobotShape{}, 0.45)[0];
  const SensorFrame frame = render_frame(scene, pose, cam);

  int valid = 0;
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const int pix = v * cam.width + u;
      const Eigen::Vector3d dir = pixel_ray(cam, pose, u, v);
      int hit = -1;
      double hit_t = 0.0;
      traverse_ray(scene.dims, pose.position(), dir, cam.max_range,
                   [&](const Voxel& vox, double t) {
                     if (scene.is_occupied(vox)) {
                       hit = scene.dims.index(vox);
                       hit_t = t;
                       return false;
                     }
                     return true;
                   });
      if (hit < 0) {
        CHECK(!frame.valid(pix));
        CHECK(frame.gt_labels[pix] == kNoLabel);
        CHECK(frame.features.col(pix).isZero());
      } else {
        ++valid;
        CHECK(frame.depth[pix] == static_cast<float>(hit_t));
        CHECK(frame.gt_labels[pix] == scene.class_ids[hit]);
        CHECK(frame.features.col(pix) == scene.features.col(hit));

        // Depth equals the Euclidean distance to the hit voxel's entry point.
        const Eigen::Vector3d entry = pose.position() + hit_t * dir;
        CHECK((entry - pose.position()).norm() ==
              doctest::Approx(frame.depth[pix]).epsilon(1e-6));
      }
    }
  }
  CHECK(valid > 100);
}

TEST_CASE("same voxel seen from two poses yields the same noiseless feature") {
  const SceneModel scene = generate_scene(8, tiny_config());
  CameraIntrinsics cam;
  cam.width = 32;
  cam.height = 24;
  const std::vector<ViewPose> pair = sample_test_poses(scene, 2, 6, RobotShape{}, 0.45);
  const ViewPose pa = pair[0];
  const ViewPose pb = pair[1];
  const SensorFrame fa = render_frame(scene, pa, cam);
  const SensorFrame fb = render_frame(scene, pb, cam);

  auto hit_of = [&](const SensorFrame& f, const ViewPose& p, int u, int v) {
    const Eigen::Vector3d dir = pixel_ray(cam, p, u, v);
    int hit = -1;
    traverse_ray(scene.dims, p.position(), dir, cam.max_range, [&](const Voxel& vox, double) {
      if (scene.is_occupied(vox)) {
        hit = scene.dims.index(vox);
        return false;
      }
      return true;
    });
    return hit;
  };

  std::map<int, Eigen::VectorXf> seen;
  for (int v = 0; v < cam.height; ++v)
    for (int u = 0; u < cam.width; ++u)
      if (fa.valid(v * cam.width + u))
        seen[hit_of(fa, pa, u, v)] = fa.features.col(v * cam.width + u);

  int shared = 0;
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const int pix = v * cam.width + u;
      if (!fb.valid(pix)) continue;
      const auto it = seen.find(hit_of(fb, pb, u, v));
      if (it == seen.end()) continue;
      ++shared;
      CHECK(fb.features.col(pix) == it->second);
    }
  }
  CHECK(shared > 20);
}

TEST_CASE("camera flat against a wall reads the wall distance at the center") {
  SceneModel scene = empty_scene(40, 9, 9);
  for (int z = 0; z < 9; ++z)
    for (int y = 0; y < 9; ++y) mark(scene, 25, y, z, 1);

  CameraIntrinsics cam;
  const ViewPose pose{0.5, 0.45, 0.45, 0.0};  // facing +x, wall face at x = 2.5
  const SensorFrame frame = render_frame(scene, pose, cam);

  for (int v = cam.height / 2 - 1; v <= cam.height / 2; ++v) {
    for (int u = cam.width / 2 - 1; u <= cam.width / 2; ++u) {
      const double d = frame.depth[v * cam.width + u];
      CHECK(d == doctest::Approx(2.0).epsilon(0.05));
    }
  }
  // Any valid pixel's depth equals the plane distance along its own ray.
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const int pix = v * cam.width + u;
      if (!frame.valid(pix)) continue;
      const Eigen::Vector3d dir = pixel_ray(cam, pose, u, v);
      if (dir.x() < 1e-6) continue;
      CHECK(frame.depth[pix] ==
            doctest::Approx(2.0 / dir.x()).epsilon(0.1));  // within a voxel diagonal
    }
  }
}

TEST_CASE("rays into open space beyond max range produce sentinel pixels") {
  const SceneModel scene = empty_scene(80, 9, 9);
  CameraIntrinsics cam;
  const ViewPose pose{0.3, 0.45, 0.45, 0.0};
  const SensorFrame frame = render_frame(scene, pose, cam);
  for (int pix = 0; pix < frame.pixels(); ++pix) {
    CHECK(!frame.valid(pix));
    CHECK(frame.depth[pix] == kNoDepth);
    CHECK(frame.gt_labels[pix] == kNoLabel);
  }
}

TEST_CASE("observation noise is seeded and leaves geometry untouched") {
  const SceneModel scene = generate_scene(9, tiny_config());
  CameraIntrinsics cam;
  cam.width = 32;
  cam.height = 24;
  const ViewPose pose{1.4, 1.1, 0.45, -0.8};

  const SensorFrame clean_a = render_frame(scene, pose, cam);
  const SensorFrame clean_b = render_frame(scene, pose, cam);
  CHECK(clean_a.features == clean_b.features);
  CHECK(clean_a.depth == clean_b.depth);

  Rng r1(77), r2(77), r3(78);
  const SensorFrame noisy_a = render_frame(scene, pose, cam, 0.5, r1);
  const SensorFrame noisy_b = render_frame(scene, pose, cam, 0.5, r2);
  const SensorFrame noisy_c = render_frame(scene, pose, cam, 0.5, r3);
  CHECK(noisy_a.features == noisy_b.features);
  CHECK(noisy_a.features != noisy_c.features);
  CHECK(noisy_a.depth == clean_a.depth);
  CHECK(noisy_a.gt_labels == clean_a.gt_labels);

  // Noise amplitude is in the right ballpark on valid pixels.
  double sq = 0.0;
  long n = 0;
  for (int pix = 0; pix < clean_a.pixels(); ++pix) {
    if (!clean_a.valid(pix)) continue;
    sq += (noisy_a.features.col(pix) - clean_a.features.col(pix)).squaredNorm();
    n += clean_a.features.rows();
  }
  REQUIRE(n > 1000);
  CHECK(std::sqrt(sq / n) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("horizontal flip mirrors columns and is an involution") {
  const SceneModel scene = generate_scene(10, tiny_config());
  CameraIntrinsics cam;
  cam.width = 16;
  cam.height = 12;
  const SensorFrame frame = render_frame(scene, ViewPose{1.2, 1.2, 0.45, 0.3}, cam);
  const SensorFrame flipped = flip_horizontal(frame);
  for (int v = 0; v < cam.height; ++v)
    for (int u = 0; u < cam.width; ++u)
      CHECK(flipped.depth[v * cam.width + u] == frame.depth[v * cam.width + (cam.width - 1 - u)]);
  const SensorFrame twice = flip_horizontal(flipped);
  CHECK(twice.features == frame.features);
  CHECK(twice.depth == frame.depth);
  CHECK(twice.gt_labels == frame.gt_labels);
}

TEST_CASE("path check against a single post matches the radius exactly") {
  SceneModel scene = empty_scene(10, 10, 9);
  mark(scene, 5, 5, 4, 2);  // center (0.55, 0.55, 0.45), inside the z-band
  RobotShape robot;         // radius 0.15, z-band [0.1, 0.8]

  const auto path_at = [&](double y) {
    return check_path(scene, ViewPose{0.15, y, 0.45, 0.0}, ViewPose{0.95, y, 0.45, 0.0}, robot);
  };
  CHECK(path_at(0.55 + robot.radius + 0.002));   // grazing outside: clear
  CHECK(!path_at(0.55 + robot.radius - 0.002));  // grazing inside: blocked
  CHECK(!path_at(0.55));                         // straight through: blocked

  // The same post below the z-band never collides.
  SceneModel low = empty_scene(10, 10, 9);
  mark(low, 5, 5, 0, 0);  // center z = 0.05 < z_min
  CHECK(check_path(low, ViewPose{0.15, 0.55, 0.45, 0.0}, ViewPose{0.95, 0.55, 0.45, 0.0}, robot));
}

TEST_CASE("degenerate and trivial path queries") {
  const SceneModel scene = generate_scene(11, tiny_config());
  RobotShape robot;
  const ViewPose free_pose{1.6, 1.6, 0.45, 0.0};
  if (pose_in_free_space(scene, free_pose, robot))
    CHECK(check_path(scene, free_pose, free_pose, robot));

  // A segment crossing the perimeter wall is blocked.
  CHECK(!check_path(scene, ViewPose{1.6, 1.6, 0.45, 0.0}, ViewPose{3.15, 1.6, 0.45, 0.0}, robot));
}

TEST_CASE("test poses are distinct, collision-free, and reproducible") {
  const SceneModel scene = generate_scene(12, tiny_config());
  RobotShape robot;
  const double height = 0.45;
  const std::vector<ViewPose> poses = sample_test_poses(scene, 120, 99, robot, height);
  REQUIRE(poses.size() == 120);

  std::set<std::pair<double, double>> positions;
  for (const ViewPose& p : poses) {
    CHECK(p.z == height);
    CHECK(pose_in_free_space(scene, p, robot));
    positions.insert({p.x, p.y});
  }
  CHECK(positions.size() == 120);

  const std::vector<ViewPose> again = sample_test_poses(scene, 120, 99, robot, height);
  for (size_t i = 0; i < poses.size(); ++i) CHECK(poses[i] == again[i]);

  const std::vector<ViewPose> other = sample_test_poses(scene, 120, 100, robot, height);
  CHECK(!(poses[0] == other[0]));
}

TEST_CASE("scene persistence round-trips bit-exactly") {
  const SceneModel scene = generate_scene(13, tiny_config());
  const std::string path = "/tmp/adasim_test_scene.txt";
  save_scene(scene, path);
  const SceneModel loaded = load_scene(path);

  CHECK(loaded.dims.equals(scene.dims));
  CHECK(loaded.occupied == scene.occupied);
  CHECK(loaded.class_ids == scene.class_ids);
  CHECK(loaded.features == scene.features);
  CHECK(loaded.class_params.source_means == scene.class_params.source_means);
  CHECK(loaded.class_params.target_means == scene.class_params.target_means);
  CHECK(loaded.class_params.shifted_classes == scene.class_params.shifted_classes);
  CHECK(loaded.class_params.sigma_feat == scene.class_params.sigma_feat);
  CHECK(loaded.config.num_classes == scene.config.num_classes);
  CHECK(loaded.config.feature_dim == scene.config.feature_dim);
  std::remove(path.c_str());
}

TEST_CASE("angle helpers wrap into [-pi, pi)") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(3.0 * M_PI) == doctest::Approx(-M_PI));
  CHECK(wrap_angle(-3.0 * M_PI) == doctest::Approx(-M_PI));
  CHECK(yaw_distance(0.1, -0.1) == doctest::Approx(0.2));
  CHECK(yaw_distance(M_PI - 0.05, -M_PI + 0.05) == doctest::Approx(0.1));
}
