#include "adasim/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "adasim/collision.hpp"
#include "adasim/io_util.hpp"

namespace adasim {

const char* to_string(GainMode mode) {
  switch (mode) {
    case GainMode::kCuriosity: return "curiosity";
    case GainMode::kExploration: return "exploration";
    case GainMode::kRandom: return "random";
  }
  return "curiosity";
}

GainMode parse_gain_mode(const std::string& name) {
  if (name == "curiosity") return GainMode::kCuriosity;
  if (name == "exploration") return GainMode::kExploration;
  if (name == "random") return GainMode::kRandom;
  throw std::invalid_argument("unknown gain mode: " + name);
}

ViewTree make_tree(const ViewPose& root) {
  ViewTree tree;
  ViewNode node;
  node.pose = root;
  tree.nodes.push_back(node);
  return tree;
}

void reset_tree(ViewTree& tree, const ViewPose& root) { tree = make_tree(root); }

void advance_root(ViewTree& tree, int child) {
  if (child <= 0 || child >= static_cast<int>(tree.nodes.size()) || tree.nodes[child].parent != 0)
    throw std::invalid_argument("advance_root: node is not a child of the root");

  // Collect the subtree below `child`. Parents precede children, so a single
  // forward pass over a keep-flag array finds every descendant.
  const int n = static_cast<int>(tree.nodes.size());
  std::vector<char> keep(n, 0);
  std::vector<int> new_index(n, -1);
  keep[child] = 1;
  std::vector<ViewNode> kept;
  for (int i = child; i < n; ++i) {
    if (i != child) {
      const int p = tree.nodes[i].parent;
      if (p < 0 || !keep[p]) continue;
      keep[i] = 1;
    }
    new_index[i] = static_cast<int>(kept.size());
    kept.push_back(tree.nodes[i]);
  }
  for (size_t i = 0; i < kept.size(); ++i) kept[i].parent = i == 0 ? -1 : new_index[kept[i].parent];
  kept[0].cost = 0.0;
  kept[0].gain = 0.0;
  kept[0].value = 0.0;
  tree.nodes = std::move(kept);
}

int first_edge_toward(const ViewTree& tree, int target) {
  int n = target;
  while (tree.nodes[n].parent > 0) n = tree.nodes[n].parent;
  if (tree.nodes[n].parent != 0) throw std::invalid_argument("first_edge_toward: target is the root");
  return n;
}

int pick_random_leaf(const ViewTree& tree, Rng& rng) {
  const int n = static_cast<int>(tree.nodes.size());
  std::vector<char> has_child(n, 0);
  for (int i = 1; i < n; ++i) has_child[tree.nodes[i].parent] = 1;
  std::vector<int> leaves;
  for (int i = 1; i < n; ++i)
    if (!has_child[i]) leaves.push_back(i);
  if (leaves.empty()) return -1;
  std::uniform_int_distribution<size_t> pick(0, leaves.size() - 1);
  return leaves[pick(rng)];
}

double edge_cost(const ViewPose& from, const ViewPose& to, double kappa_yaw) {
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  double c = std::sqrt(dx * dx + dy * dy) + kappa_yaw * yaw_distance(from.yaw, to.yaw);
  return std::max(c, 1e-3);
}

std::optional<std::pair<int, ViewPose>> sample_viewpoint(const SemanticVoxelMap& map,
                                                         const ViewTree& tree,
                                                         const RobotShape& robot,
                                                         const PlannerParams& params, Rng& rng) {
  const GridDims& dims = map.dims();
  auto blocked = [&map](const Voxel& v) { return map.state(v) != VoxelState::kFree; };
  std::uniform_int_distribution<size_t> pick_node(0, tree.nodes.size() - 1);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> yaw_draw(-M_PI, M_PI);

  for (int attempt = 0; attempt < params.max_reject; ++attempt) {
    const int parent = static_cast<int>(pick_node(rng));
    const ViewPose& anchor = tree.nodes[parent].pose;
    // Uniform draw in the XY disk around the anchor, by rejection from the
    // bounding square.
    double ox = unit(rng) * params.sample_radius;
    double oy = unit(rng) * params.sample_radius;
    if (ox * ox + oy * oy > params.sample_radius * params.sample_radius) continue;
    ViewPose pose{anchor.x + ox, anchor.y + oy, anchor.z, yaw_draw(rng)};
    if (!dims.contains(dims.voxel_of(pose.position()))) continue;
    if (!check_path(dims, blocked, pose, pose, robot)) continue;
    if (!check_path(dims, blocked, anchor, pose, robot)) continue;
    return std::make_pair(parent, pose);
  }
  return std::nullopt;
}

double compute_gain(const SemanticVoxelMap& map, const ViewPose& pose,
                    const CameraIntrinsics& cam, const GainParams& params) {
  const CameraIntrinsics rays = cam.subsampled(params.rays_x, params.rays_y);
  const GridDims& dims = map.dims();
  const Eigen::Vector3d origin = pose.position();

  // Per-voxel bookkeeping so each voxel contributes at most once per view;
  // surface voxels keep the closest hit depth across rays.
  std::unordered_map<int, double> surface_depth;
  std::unordered_map<int, char> unobserved;

  for (int v = 0; v < rays.height; ++v) {
    for (int u = 0; u < rays.width; ++u) {
      const Eigen::Vector3d dir = pixel_ray(rays, pose, u, v);
      traverse_ray(dims, origin, dir, params.max_range, [&](const Voxel& vox, double t_entry) {
        const int idx = dims.index(vox);
        switch (map.state(idx)) {
          case VoxelState::kSurface: {
            auto [it, fresh] = surface_depth.try_emplace(idx, t_entry);
            if (!fresh && t_entry < it->second) it->second = t_entry;
            return false;  // surfaces block the ray
          }
          case VoxelState::kUnobserved:
            unobserved.try_emplace(idx, 1);
            return true;  // unknown space does not block
          case VoxelState::kFree:
            return true;
        }
        return true;
      });
    }
  }

  if (params.mode == GainMode::kExploration) return static_cast<double>(unobserved.size());

  double gain = params.alpha_u * static_cast<double>(unobserved.size());
  std::vector<std::pair<int, double>> hits(surface_depth.begin(), surface_depth.end());
  std::sort(hits.begin(), hits.end());
  for (const auto& [idx, depth] : hits)
    gain += map.discount(idx, depth, params.d_min) * map.uncertainty(idx);
  return gain;
}

Selection select_nbv(ViewTree& tree) {
  Selection sel;
  const int n = static_cast<int>(tree.nodes.size());
  if (n <= 1) {
    sel.exhausted = true;
    return sel;
  }

  // Parents precede children, so path sums fill in one forward pass.
  std::vector<double> path_gain(n, 0.0), path_cost(n, 0.0);
  int best_gain_node = -1;
  for (int i = 1; i < n; ++i) {
    const int p = tree.nodes[i].parent;
    path_gain[i] = path_gain[p] + tree.nodes[i].gain;
    path_cost[i] = path_cost[p] + tree.nodes[i].cost;
    tree.nodes[i].value = path_gain[i] / path_cost[i];
    if (tree.nodes[i].value > sel.value) {
      sel.value = tree.nodes[i].value;
      sel.target = i;
    }
    if (best_gain_node < 0 || tree.nodes[i].gain > tree.nodes[best_gain_node].gain)
      best_gain_node = i;
  }

  if (sel.target < 0) {
    // All path values are zero; fall back to the largest single gain.
    if (tree.nodes[best_gain_node].gain <= 0.0) {
      sel.exhausted = true;
      return sel;
    }
    sel.target = best_gain_node;
    sel.value = tree.nodes[best_gain_node].value;
  }
  sel.next = first_edge_toward(tree, sel.target);
  return sel;
}

TickResult planner_tick(const SemanticVoxelMap& map, ViewTree& tree,
                        const CameraIntrinsics& cam, const RobotShape& robot,
                        const PlannerParams& params, Rng& rng) {
  const bool random_mode = params.gain.mode == GainMode::kRandom;

  for (int s = 0; s < params.n_new; ++s) {
    if (static_cast<int>(tree.nodes.size()) >= params.max_nodes) break;
    auto sample = sample_viewpoint(map, tree, robot, params, rng);
    if (!sample) break;
    ViewNode node;
    node.pose = sample->second;
    node.parent = sample->first;
    node.cost = edge_cost(tree.nodes[node.parent].pose, node.pose);
    if (!random_mode) {
      node.gain = compute_gain(map, node.pose, cam, params.gain);
      node.gain_stamp = map.version();
    }
    tree.nodes.push_back(node);
  }

  TickResult result;
  if (tree.nodes.size() <= 1) {
    result.action = TickAction::kStuck;
    return result;
  }

  if (random_mode) {
    result.target = pick_random_leaf(tree, rng);
    result.next = first_edge_toward(tree, result.target);
  } else {
    // Refresh stale gains only along the current best path, re-selecting
    // until the winner is evaluated against the present map (or the budget
    // runs out, in which case the stale winner stands for this tick).
    int budget = params.reeval_budget;
    while (true) {
      Selection sel = select_nbv(tree);
      if (sel.exhausted) {
        result.action = TickAction::kExhausted;
        return result;
      }
      std::vector<int> stale;
      for (int i = sel.target; i > 0; i = tree.nodes[i].parent)
        if (tree.nodes[i].gain_stamp != map.version()) stale.push_back(i);
      if (stale.empty() || budget <= 0) {
        result.target = sel.target;
        result.next = sel.next;
        result.value = sel.value;
        break;
      }
      for (int i : stale) {
        if (budget-- <= 0) break;
        tree.nodes[i].gain = compute_gain(map, tree.nodes[i].pose, cam, params.gain);
        tree.nodes[i].gain_stamp = map.version();
      }
    }
  }

  // The chosen edge was collision-checked when sampled; the map may have
  // changed since, so re-check before committing to the move.
  auto blocked = [&map](const Voxel& v) { return map.state(v) != VoxelState::kFree; };
  if (!check_path(map.dims(), blocked, tree.nodes[0].pose, tree.nodes[result.next].pose, robot)) {
    reset_tree(tree, tree.nodes[0].pose);
    result = TickResult{};
    result.action = TickAction::kStuck;
    return result;
  }
  result.action = TickAction::kMove;
  return result;
}

void write_trajectory_csv(const std::string& path, const std::vector<TrajectoryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory log: " + path);
  out << "tick,x,y,z,yaw,gain,mode\n";
  char buf[256];
  for (const TrajectoryRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%ld,%.9g,%.9g,%.9g,%.9g,%.9g,%s\n", r.tick, r.pose.x, r.pose.y,
                  r.pose.z, r.pose.yaw, r.gain, to_string(r.mode));
    out << buf;
  }
}

void add_view_counts(const GridDims& dims, const SensorFrame& frame, std::vector<int>& counts) {
  if (static_cast<int>(counts.size()) != dims.count())
    throw std::invalid_argument("view-count buffer does not match the grid");
  const Eigen::Vector3d origin = frame.pose.position();
  const CameraIntrinsics cam = frame.intrinsics();
  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      const long pix = static_cast<long>(v) * frame.width + u;
      if (!frame.valid(pix)) continue;
      const Eigen::Vector3d dir = pixel_ray(cam, frame.pose, u, v);
      const Eigen::Vector3d hit = origin + dir * (frame.depth[pix] + 0.5 * dims.voxel_size);
      const Voxel vox = dims.voxel_of(hit);
      if (dims.contains(vox)) ++counts[dims.index(vox)];
    }
  }
}

}  // namespace adasim
