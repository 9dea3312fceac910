#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adasim/camera.hpp"
#include "adasim/pose.hpp"
#include "adasim/render.hpp"
#include "adasim/rng.hpp"
#include "adasim/scene.hpp"
#include "adasim/semantic_map.hpp"

namespace adasim {

enum class GainMode { kCuriosity, kExploration, kRandom };

const char* to_string(GainMode mode);
GainMode parse_gain_mode(const std::string& name);

// View-gain knobs. Curiosity rewards surface voxels by discounted uncertainty
// and unobserved voxels by alpha_u; exploration counts unobserved voxels only;
// random skips gain evaluation entirely.
struct GainParams {
  double alpha_u = 0.001;  // reward per unobserved voxel in curiosity mode
  double d_min = 1.0;      // range floor of the training-weight discount
  GainMode mode = GainMode::kCuriosity;
  int rays_x = 16;         // gain rays subsample the camera FoV at fixed aspect
  int rays_y = 12;
  double max_range = 5.0;
};

struct PlannerParams {
  GainParams gain;
  int n_new = 10;              // expansion samples attempted per tick
  double sample_radius = 2.0;  // new poses land within this XY radius of a tree node
  int max_reject = 50;         // rejected draws before a sample attempt gives up
  int max_nodes = 600;         // expansion pauses above this tree size
  int reeval_budget = 64;      // stale-gain recomputations allowed per tick
};

struct ViewNode {
  ViewPose pose;
  int parent = -1;          // -1 only for the root
  double gain = 0.0;
  double cost = 0.0;        // edge cost from the parent; > 0 off the root
  double value = 0.0;       // path gain / path cost, filled by select_nbv
  uint64_t gain_stamp = 0;  // map version at the last gain evaluation
};

// Rooted tree of candidate view poses, stored in insertion order. The root
// (the robot's pose) lives at index 0 and parents always precede children,
// which keeps index order usable as a deterministic tie-break.
struct ViewTree {
  std::vector<ViewNode> nodes;
};

ViewTree make_tree(const ViewPose& root);
void reset_tree(ViewTree& tree, const ViewPose& root);

// Re-roots the tree at `child` (a child of the current root), keeping the
// subtree below it in insertion order and dropping every other branch.
void advance_root(ViewTree& tree, int child);

// First node after the root on the path root -> target.
int first_edge_toward(const ViewTree& tree, int target);

// Uniform pick among childless non-root nodes; -1 when only the root exists.
int pick_random_leaf(const ViewTree& tree, Rng& rng);

// Euclidean XY distance plus kappa_yaw times the wrapped yaw difference,
// floored at 1e-3 so edge costs stay strictly positive.
double edge_cost(const ViewPose& from, const ViewPose& to, double kappa_yaw = 0.2);

// Draws a view pose uniformly inside the sampling radius of a uniformly
// chosen tree node (yaw uniform, z kept on the planning plane) and accepts it
// when both the pose and the connecting edge are collision-free in known-free
// space. Returns (parent node, pose); nullopt once max_reject draws fail.
std::optional<std::pair<int, ViewPose>> sample_viewpoint(const SemanticVoxelMap& map,
                                                         const ViewTree& tree,
                                                         const RobotShape& robot,
                                                         const PlannerParams& params, Rng& rng);

// Expected gain of a view: rays subsampling the camera FoV walk the
// reconstructed map until a surface voxel blocks them. Each distinct surface
// voxel contributes discount(at its closest hit depth) * uncertainty, each
// distinct unobserved voxel contributes alpha_u (1 in exploration mode), and
// free voxels contribute nothing. Voxel contributions are summed in index
// order so the result is reproducible bit for bit.
double compute_gain(const SemanticVoxelMap& map, const ViewPose& pose,
                    const CameraIntrinsics& cam, const GainParams& params);

struct Selection {
  int target = -1;  // argmax of path gain / path cost, ties to the oldest node
  int next = -1;    // first edge on the path to target
  double value = 0.0;
  bool exhausted = false;  // every stored gain is zero
};

// Scores every non-root node by accumulated path gain over accumulated path
// cost (stored in node.value) and picks the first edge toward the best node.
// When all path values are zero, falls back to the highest single gain; when
// that is zero too, reports exploration exhausted.
Selection select_nbv(ViewTree& tree);

enum class TickAction { kMove, kExhausted, kStuck };

struct TickResult {
  TickAction action = TickAction::kStuck;
  int next = -1;    // node to move to when action == kMove
  int target = -1;  // best-value node the move heads toward
  double value = 0.0;
};

// One planning step: expand the tree by up to n_new samples, lazily refresh
// stale gains along candidate best paths (bounded by reeval_budget), select
// the next single-edge move, and re-check that edge against the current map.
// The caller executes the move and then calls advance_root(tree, next).
// kStuck means the tree was reset (no feasible sample or the chosen edge went
// stale); kExhausted means nodes exist but every gain is zero.
TickResult planner_tick(const SemanticVoxelMap& map, ViewTree& tree,
                        const CameraIntrinsics& cam, const RobotShape& robot,
                        const PlannerParams& params, Rng& rng);

struct TrajectoryRow {
  long tick = 0;
  ViewPose pose;
  double gain = 0.0;
  GainMode mode = GainMode::kCuriosity;
};

// Comma-separated trajectory log with a header row.
void write_trajectory_csv(const std::string& path, const std::vector<TrajectoryRow>& rows);

// Increments per-voxel view counters for every pixel of the frame that hit a
// surface (input to the observation heat map).
void add_view_counts(const GridDims& dims, const SensorFrame& frame, std::vector<int>& counts);

}  // namespace adasim
