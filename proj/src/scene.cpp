#include "adasim/scene.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "adasim/collision.hpp"
#include "adasim/io_util.hpp"

namespace adasim {

namespace {

ClassParams make_class_params(const SceneConfig& cfg) {
  ClassParams p;
  p.sigma_feat = cfg.sigma_feat;
  Rng rng(derive_seed(cfg.class_seed, "class-means"));
  std::normal_distribution<double> gauss(0.0, 1.0);

  p.source_means.resize(cfg.feature_dim, cfg.num_classes);
  for (int c = 0; c < cfg.num_classes; ++c)
    for (int f = 0; f < cfg.feature_dim; ++f) p.source_means(f, c) = cfg.mean_scale * gauss(rng);

  p.target_means = p.source_means;
  const int first_shifted = std::max(0, cfg.num_classes - cfg.num_shifted_classes);
  for (int c = first_shifted; c < cfg.num_classes; ++c) p.shifted_classes.push_back(c);
  std::vector<std::pair<int, int>> used_pairs;
  for (int c : p.shifted_classes) {
    // Shift toward the point equidistant from the class's own mean and two
    // anchor classes. The nearest-mean margin against anchor k is linear in
    // the shift, D_k/2 - shift . unit(mu_k - mu_c), so this direction erodes
    // both margins in proportion: the class becomes confusable with both
    // anchors at once instead of tunneling straight into one of them.
    // Anchors are unshifted (their clusters stay put) and every shifted
    // class gets a distinct anchor pair, so no two shifted classes steer
    // into the same region and merge. Floor and walls (classes 0, 1) are
    // excluded as anchors: they dominate pixel mass, so learned boundaries
    // against them already bulge into rare-class territory and would swallow
    // a cluster shifted toward them.
    const auto is_shifted = [&](int k) {
      return std::find(p.shifted_classes.begin(), p.shifted_classes.end(), k) !=
             p.shifted_classes.end();
    };
    std::vector<int> anchors;  // unshifted object classes by distance from c
    for (int o = 2; o < cfg.num_classes; ++o)
      if (o != c && !is_shifted(o)) anchors.push_back(o);
    if (anchors.empty())  // tiny class counts: fall back to any unshifted class
      for (int o = 0; o < cfg.num_classes; ++o)
        if (o != c && !is_shifted(o)) anchors.push_back(o);
    if (anchors.empty()) continue;  // every other class shifted: leave in place
    std::sort(anchors.begin(), anchors.end(), [&](int a, int b) {
      return (p.source_means.col(a) - p.source_means.col(c)).norm() <
             (p.source_means.col(b) - p.source_means.col(c)).norm();
    });
    int n1 = anchors[0], n2 = -1;
    for (size_t i = 1; i < anchors.size(); ++i) {
      const std::pair<int, int> pair{std::min(n1, anchors[i]), std::max(n1, anchors[i])};
      if (std::find(used_pairs.begin(), used_pairs.end(), pair) == used_pairs.end()) {
        n2 = anchors[i];
        used_pairs.push_back(pair);
        break;
      }
    }
    const Eigen::VectorXd e1 = (p.source_means.col(n1) - p.source_means.col(c)).normalized();
    const double d1 = (p.source_means.col(n1) - p.source_means.col(c)).norm();
    Eigen::VectorXd dir = e1;
    if (n2 >= 0) {
      const Eigen::VectorXd e2 = (p.source_means.col(n2) - p.source_means.col(c)).normalized();
      const double d2 = (p.source_means.col(n2) - p.source_means.col(c)).norm();
      const double g = e1.dot(e2);
      const double det = 1.0 - g * g;
      if (det > 1e-6) {
        // v = a e1 + b e2 with v.e1 = d1/2, v.e2 = d2/2 (both margins zero).
        const double a = (0.5 * d1 - g * 0.5 * d2) / det;
        const double b = (0.5 * d2 - g * 0.5 * d1) / det;
        dir = a * e1 + b * e2;
      } else {
        dir = 0.5 * (e1 + e2);
      }
      if (dir.norm() > 0.0) dir.normalize();
    }
    p.target_means.col(c) += cfg.shift_magnitude * dir;
  }
  return p;
}

struct Box {
  int x0, y0, x1, y1, z1;  // voxel ranges [x0,x1] x [y0,y1] x [1,z1]
  int class_id;
};

bool boxes_overlap(const Box& a, const Box& b, int clearance) {
  return a.x0 - clearance <= b.x1 && b.x0 - clearance <= a.x1 && a.y0 - clearance <= b.y1 &&
         b.y0 - clearance <= a.y1;
}

}  // namespace

SceneModel generate_scene(uint64_t seed, const SceneConfig& cfg) {
  if (cfg.num_classes < 2) throw std::runtime_error("scene needs at least floor and wall classes");
  if (cfg.nx < 4 || cfg.ny < 4 || cfg.nz < 2) throw std::runtime_error("scene grid too small");

  SceneModel scene;
  scene.config = cfg;
  scene.dims = {cfg.nx, cfg.ny, cfg.nz, cfg.voxel_size};
  scene.class_params = make_class_params(cfg);
  scene.occupied.assign(scene.dims.count(), 0);
  scene.class_ids.assign(scene.dims.count(), -1);

  auto set_voxel = [&](int x, int y, int z, int cls) {
    const int idx = scene.dims.index({x, y, z});
    scene.occupied[idx] = 1;
    scene.class_ids[idx] = static_cast<int16_t>(cls);
  };

  // Floor (class 0) and perimeter walls (class 1).
  for (int y = 0; y < cfg.ny; ++y)
    for (int x = 0; x < cfg.nx; ++x) set_voxel(x, y, 0, 0);
  for (int z = 0; z < cfg.nz; ++z) {
    for (int x = 0; x < cfg.nx; ++x) {
      set_voxel(x, 0, z, 1);
      set_voxel(x, cfg.ny - 1, z, 1);
    }
    for (int y = 0; y < cfg.ny; ++y) {
      set_voxel(0, y, z, 1);
      set_voxel(cfg.nx - 1, y, z, 1);
    }
  }

  // Box objects. Object classes are assigned round-robin so every class id in
  // [2, K) appears when num_objects allows it.
  Rng rng(derive_seed(seed, "scene-layout"));
  const int num_object_classes = cfg.num_classes - 2;
  std::vector<Box> boxes;
  if (cfg.num_objects > 0 && num_object_classes <= 0)
    throw std::runtime_error("objects requested but no object classes available");
  for (int i = 0; i < cfg.num_objects; ++i) {
    const int cls = 2 + (i % num_object_classes);
    std::uniform_int_distribution<int> size_xy(cfg.min_object_xy, cfg.max_object_xy);
    std::uniform_int_distribution<int> size_z(cfg.min_object_z, std::min(cfg.max_object_z, cfg.nz - 1));
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      const int sx = size_xy(rng);
      const int sy = size_xy(rng);
      const int sz = size_z(rng);
      const int margin = 1 + cfg.object_clearance;
      if (cfg.nx - 1 - margin - sx <= margin || cfg.ny - 1 - margin - sy <= margin) break;
      std::uniform_int_distribution<int> px(margin, cfg.nx - 1 - margin - sx);
      std::uniform_int_distribution<int> py(margin, cfg.ny - 1 - margin - sy);
      Box b{px(rng), py(rng), 0, 0, sz, cls};
      b.x1 = b.x0 + sx - 1;
      b.y1 = b.y0 + sy - 1;
      bool conflict = false;
      for (const Box& other : boxes)
        if (boxes_overlap(b, other, cfg.object_clearance)) conflict = true;
      if (conflict) continue;
      boxes.push_back(b);
      placed = true;
    }
    if (!placed)
      throw std::runtime_error("could not place object " + std::to_string(i) +
                               " without blocking free space");
  }
  for (const Box& b : boxes)
    for (int z = 1; z <= b.z1; ++z)
      for (int y = b.y0; y <= b.y1; ++y)
        for (int x = b.x0; x <= b.x1; ++x) set_voxel(x, y, z, b.class_id);

  // Per-voxel appearance, drawn once from the configured domain.
  const Eigen::MatrixXd& means = scene.class_params.means(cfg.domain);
  Rng feat_rng(derive_seed(seed, "scene-features"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  scene.features = Eigen::MatrixXf::Zero(cfg.feature_dim, scene.dims.count());
  for (int idx = 0; idx < scene.dims.count(); ++idx) {
    if (!scene.occupied[idx]) continue;
    const int cls = scene.class_ids[idx];
    for (int f = 0; f < cfg.feature_dim; ++f)
      scene.features(f, idx) = static_cast<float>(means(f, cls) + cfg.sigma_feat * gauss(feat_rng));
  }
  return scene;
}

bool pose_in_free_space(const SceneModel& scene, const ViewPose& pose, const RobotShape& robot) {
  if (pose.x < 0 || pose.y < 0 || pose.x >= scene.dims.nx * scene.dims.voxel_size ||
      pose.y >= scene.dims.ny * scene.dims.voxel_size)
    return false;
  return check_path(scene, pose, pose, robot);
}

std::vector<ViewPose> sample_test_poses(const SceneModel& scene, int n, uint64_t seed,
                                        const RobotShape& robot, double camera_height) {
  if (n < 1) throw std::invalid_argument("sample_test_poses: n must be >= 1");
  Rng rng(derive_seed(seed, "test-poses"));
  const double h = scene.dims.voxel_size;
  std::uniform_real_distribution<double> ux(h, (scene.dims.nx - 1) * h);
  std::uniform_real_distribution<double> uy(h, (scene.dims.ny - 1) * h);
  std::uniform_real_distribution<double> uyaw(-M_PI, M_PI);

  std::vector<ViewPose> poses;
  poses.reserve(n);
  const int max_attempts = 1000 * n;
  int attempts = 0;
  while (static_cast<int>(poses.size()) < n) {
    if (++attempts > max_attempts)
      throw std::runtime_error("sample_test_poses: free space too small");
    ViewPose p{ux(rng), uy(rng), camera_height, wrap_angle(uyaw(rng))};
    if (!pose_in_free_space(scene, p, robot)) continue;
    poses.push_back(p);
  }
  return poses;
}

void save_scene(const SceneModel& scene, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scene file: " + path);
  const SceneConfig& c = scene.config;
  out << "adasim-scene v1\n";
  out << "dims " << c.nx << " " << c.ny << " " << c.nz << " " << hex_double(c.voxel_size) << "\n";
  out << "classes " << c.num_classes << " feature_dim " << c.feature_dim << "\n";
  out << "sigma_feat " << hex_double(scene.class_params.sigma_feat) << "\n";
  out << "domain " << (c.domain == Domain::kSource ? "source" : "target") << "\n";
  out << "shifted";
  for (int s : scene.class_params.shifted_classes) out << " " << s;
  out << "\n";
  for (int dom = 0; dom < 2; ++dom) {
    const Eigen::MatrixXd& m =
        dom == 0 ? scene.class_params.source_means : scene.class_params.target_means;
    out << (dom == 0 ? "means source\n" : "means target\n");
    for (int cls = 0; cls < c.num_classes; ++cls) {
      for (int f = 0; f < c.feature_dim; ++f) out << (f ? " " : "") << hex_double(m(f, cls));
      out << "\n";
    }
  }
  // Run-length payload over flat voxel index: "<count> <class>" with -1 = free.
  out << "voxels rle\n";
  const int total = scene.dims.count();
  int i = 0;
  while (i < total) {
    int j = i;
    const int cls = scene.class_ids[i];
    while (j < total && scene.class_ids[j] == cls) ++j;
    out << (j - i) << " " << cls << "\n";
    i = j;
  }
  out << "features\n";
  for (int idx = 0; idx < total; ++idx) {
    if (!scene.occupied[idx]) continue;
    for (int f = 0; f < c.feature_dim; ++f)
      out << (f ? " " : "") << hex_float(scene.features(f, idx));
    out << "\n";
  }
  out << "end\n";
}

SceneModel load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read scene file: " + path);
  std::string line;
  std::getline(in, line);
  if (line != "adasim-scene v1") throw std::runtime_error("bad scene file header: " + line);

  SceneModel scene;
  SceneConfig& c = scene.config;
  std::string tok;
  in >> tok >> c.nx >> c.ny >> c.nz >> tok;
  c.voxel_size = parse_double(tok);
  in >> tok >> c.num_classes >> tok >> c.feature_dim;
  in >> tok >> tok;
  scene.class_params.sigma_feat = parse_double(tok);
  c.sigma_feat = scene.class_params.sigma_feat;
  in >> tok >> tok;
  c.domain = tok == "source" ? Domain::kSource : Domain::kTarget;
  std::getline(in, line);  // rest of domain line
  std::getline(in, line);  // shifted line
  {
    std::istringstream ss(line);
    ss >> tok;
    int cls;
    while (ss >> cls) scene.class_params.shifted_classes.push_back(cls);
    c.num_shifted_classes = static_cast<int>(scene.class_params.shifted_classes.size());
  }
  for (int dom = 0; dom < 2; ++dom) {
    in >> tok >> tok;  // "means source|target"
    Eigen::MatrixXd m(c.feature_dim, c.num_classes);
    for (int cls = 0; cls < c.num_classes; ++cls)
      for (int f = 0; f < c.feature_dim; ++f) {
        in >> tok;
        m(f, cls) = parse_double(tok);
      }
    (dom == 0 ? scene.class_params.source_means : scene.class_params.target_means) = m;
  }
  in >> tok >> tok;  // "voxels rle"
  scene.dims = {c.nx, c.ny, c.nz, c.voxel_size};
  const int total = scene.dims.count();
  scene.occupied.assign(total, 0);
  scene.class_ids.assign(total, -1);
  int filled = 0;
  while (filled < total) {
    int count, cls;
    if (!(in >> count >> cls)) throw std::runtime_error("truncated voxel payload");
    for (int k = 0; k < count; ++k) {
      scene.class_ids[filled] = static_cast<int16_t>(cls);
      scene.occupied[filled] = cls >= 0 ? 1 : 0;
      ++filled;
    }
  }
  in >> tok;  // "features"
  scene.features = Eigen::MatrixXf::Zero(c.feature_dim, total);
  for (int idx = 0; idx < total; ++idx) {
    if (!scene.occupied[idx]) continue;
    for (int f = 0; f < c.feature_dim; ++f) {
      in >> tok;
      scene.features(f, idx) = parse_float(tok);
    }
  }
  return scene;
}

}  // namespace adasim
