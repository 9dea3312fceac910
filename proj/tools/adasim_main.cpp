#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "adasim/harness.hpp"
#include "adasim/learner.hpp"
#include "adasim/metrics.hpp"
#include "adasim/render.hpp"
#include "adasim/scene.hpp"
#include "adasim/seg_model.hpp"

using namespace adasim;

namespace {

int cmd_run(const std::string& config_path, const std::string& output_dir) {
  ExperimentConfig config = load_experiment_config(config_path);
  if (!output_dir.empty()) config.output_dir = output_dir;
  const ExperimentResult result = run_experiment(config);
  std::cout << "wrote " << result.rows.size() << " metric rows to " << config.output_dir << "\n";
  if (!result.failures.empty()) {
    std::cerr << result.failures.size() << " run(s) failed; see "
              << config.output_dir + "/failures.txt" << "\n";
    return 1;
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& scene_path, int poses,
             uint64_t seed, double noise_std) {
  const SegModel model = load_checkpoint(checkpoint_path);
  const SceneModel scene = load_scene(scene_path);

  CameraIntrinsics cam;
  RobotShape robot;
  const auto test_poses = sample_test_poses(scene, poses, seed, robot, robot.z_max);
  Rng rng = make_rng(seed, "eval-noise");
  std::vector<SensorFrame> frames;
  for (size_t i = 0; i < test_poses.size(); ++i)
    frames.push_back(
        render_frame(scene, test_poses[i], cam, noise_std, rng, static_cast<int64_t>(i)));

  const IouReport report = evaluate_model(model, frames);
  for (Eigen::Index c = 0; c < report.class_iou.size(); ++c) {
    if (report.valid[c])
      std::printf("class %2ld  iou %.4f\n", static_cast<long>(c), report.class_iou[c]);
    else
      std::printf("class %2ld  (absent from test set)\n", static_cast<long>(c));
  }
  std::printf("miou %.4f over %d frames\n", report.miou, static_cast<int>(frames.size()));
  return 0;
}

int cmd_gen_scene(uint64_t seed, const std::string& out_path, const std::string& domain,
                  const std::string& config_path) {
  SceneConfig scene_cfg;
  if (!config_path.empty()) scene_cfg = load_experiment_config(config_path).scene;
  if (domain == "source")
    scene_cfg.domain = Domain::kSource;
  else if (domain == "target")
    scene_cfg.domain = Domain::kTarget;
  else
    throw std::runtime_error("domain must be source or target");
  const SceneModel scene = generate_scene(seed, scene_cfg);
  save_scene(scene, out_path);
  int occupied = 0;
  for (uint8_t o : scene.occupied) occupied += o;
  std::cout << "wrote " << out_path << " (" << scene.dims.nx << "x" << scene.dims.ny << "x"
            << scene.dims.nz << ", " << occupied << " occupied voxels)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embodied active domain adaptation simulator"};
  app.require_subcommand(1);

  std::string config_path, output_dir;
  CLI::App* run = app.add_subcommand("run", "run a full experiment from a config file");
  run->add_option("-c,--config", config_path, "experiment config (json)")->required();
  run->add_option("-o,--output-dir", output_dir, "override the config's output directory");

  std::string checkpoint_path, scene_path;
  int eval_poses = 120;
  uint64_t eval_seed = 42;
  double eval_noise = 0.65;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a scene");
  eval->add_option("-m,--checkpoint", checkpoint_path, "model checkpoint")->required();
  eval->add_option("-s,--scene", scene_path, "scene file")->required();
  eval->add_option("-n,--poses", eval_poses, "number of test poses");
  eval->add_option("--seed", eval_seed, "pose/noise seed");
  eval->add_option("--noise", eval_noise, "feature noise std");

  std::string plot_dir;
  CLI::App* plot = app.add_subcommand("plot", "regenerate plots from an output directory");
  plot->add_option("-d,--dir", plot_dir, "experiment output directory")->required();

  uint64_t scene_seed = 42;
  std::string scene_out = "scene.txt", scene_domain = "target", scene_config;
  CLI::App* gen = app.add_subcommand("gen-scene", "generate and save a scene");
  gen->add_option("--seed", scene_seed, "scene seed");
  gen->add_option("-o,--out", scene_out, "output path");
  gen->add_option("--domain", scene_domain, "source or target");
  gen->add_option("-c,--config", scene_config, "take scene parameters from this experiment config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, output_dir);
    if (eval->parsed()) return cmd_eval(checkpoint_path, scene_path, eval_poses, eval_seed,
                                        eval_noise);
    if (plot->parsed()) {
      plot_experiment(plot_dir);
      std::cout << "plots written under " << plot_dir << "\n";
      return 0;
    }
    if (gen->parsed()) return cmd_gen_scene(scene_seed, scene_out, scene_domain, scene_config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
