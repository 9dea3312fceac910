#include "adasim/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "adasim/plot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace adasim {

namespace {

SceneConfig scene_from_json(const json& j, SceneConfig base) {
  base.nx = j.value("nx", base.nx);
  base.ny = j.value("ny", base.ny);
  base.nz = j.value("nz", base.nz);
  base.voxel_size = j.value("voxel_size", base.voxel_size);
  base.num_classes = j.value("num_classes", base.num_classes);
  base.feature_dim = j.value("feature_dim", base.feature_dim);
  base.num_objects = j.value("num_objects", base.num_objects);
  base.min_object_xy = j.value("min_object_xy", base.min_object_xy);
  base.max_object_xy = j.value("max_object_xy", base.max_object_xy);
  base.min_object_z = j.value("min_object_z", base.min_object_z);
  base.max_object_z = j.value("max_object_z", base.max_object_z);
  base.object_clearance = j.value("object_clearance", base.object_clearance);
  base.num_shifted_classes = j.value("num_shifted_classes", base.num_shifted_classes);
  base.shift_magnitude = j.value("shift_magnitude", base.shift_magnitude);
  base.sigma_feat = j.value("sigma_feat", base.sigma_feat);
  base.mean_scale = j.value("mean_scale", base.mean_scale);
  base.class_seed = j.value("class_seed", base.class_seed);
  return base;
}

json scene_to_json(const SceneConfig& s) {
  return json{{"nx", s.nx},
              {"ny", s.ny},
              {"nz", s.nz},
              {"voxel_size", s.voxel_size},
              {"num_classes", s.num_classes},
              {"feature_dim", s.feature_dim},
              {"num_objects", s.num_objects},
              {"min_object_xy", s.min_object_xy},
              {"max_object_xy", s.max_object_xy},
              {"min_object_z", s.min_object_z},
              {"max_object_z", s.max_object_z},
              {"object_clearance", s.object_clearance},
              {"num_shifted_classes", s.num_shifted_classes},
              {"shift_magnitude", s.shift_magnitude},
              {"sigma_feat", s.sigma_feat},
              {"mean_scale", s.mean_scale},
              {"class_seed", s.class_seed}};
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  in >> j;

  ExperimentConfig c;
  c.name = j.value("name", c.name);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.scene_seed = j.value("scene_seed", c.scene_seed);
  if (j.contains("scene")) c.scene = scene_from_json(j["scene"], c.scene);
  c.source_scene_seed = j.value("source_scene_seed", c.source_scene_seed);
  c.source_corpus_frames = j.value("source_corpus_frames", c.source_corpus_frames);

  if (j.contains("camera")) {
    const json& cam = j["camera"];
    c.camera.width = cam.value("width", c.camera.width);
    c.camera.height = cam.value("height", c.camera.height);
    if (cam.contains("hfov_deg")) c.camera.hfov = cam["hfov_deg"].get<double>() * M_PI / 180.0;
    c.camera.max_range = cam.value("max_range", c.camera.max_range);
  }
  if (j.contains("robot")) {
    const json& r = j["robot"];
    c.robot.radius = r.value("radius", c.robot.radius);
    c.robot.z_min = r.value("z_min", c.robot.z_min);
    c.robot.z_max = r.value("z_max", c.robot.z_max);
  }
  if (j.contains("planner")) {
    const json& p = j["planner"];
    c.planner.gain.alpha_u = p.value("alpha_u", c.planner.gain.alpha_u);
    c.planner.gain.d_min = p.value("d_min", c.planner.gain.d_min);
    c.planner.gain.rays_x = p.value("rays_x", c.planner.gain.rays_x);
    c.planner.gain.rays_y = p.value("rays_y", c.planner.gain.rays_y);
    c.planner.n_new = p.value("n_new", c.planner.n_new);
    c.planner.sample_radius = p.value("sample_radius", c.planner.sample_radius);
    c.planner.max_reject = p.value("max_reject", c.planner.max_reject);
    c.planner.max_nodes = p.value("max_nodes", c.planner.max_nodes);
    c.planner.reeval_budget = p.value("reeval_budget", c.planner.reeval_budget);
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    c.train.bundle_size = t.value("bundle_size", c.train.bundle_size);
    c.train.epochs = t.value("epochs", c.train.epochs);
    c.train.lr_latent = t.value("lr_latent", c.train.lr_latent);
    c.train.lr_head = t.value("lr_head", c.train.lr_head);
    c.train.replay_fraction = t.value("replay_fraction", c.train.replay_fraction);
    c.train.val_fraction = t.value("val_fraction", c.train.val_fraction);
    c.train.patience = t.value("patience", c.train.patience);
    if (t.contains("supervision")) c.train.supervision = parse_supervision(t["supervision"]);
    c.train.batch_pixels = t.value("batch_pixels", c.train.batch_pixels);
    c.train.refit_samples = t.value("refit_samples", c.train.refit_samples);
    c.train.pca_dim = t.value("pca_dim", c.train.pca_dim);
  }
  c.pretrain_epochs = j.value("pretrain_epochs", c.pretrain_epochs);

  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j["methods"]) c.methods.push_back(parse_gain_mode(m));
  }
  if (j.contains("seeds")) {
    c.seeds.clear();
    for (const auto& s : j["seeds"]) c.seeds.push_back(s.get<uint64_t>());
  }
  c.cycles = j.value("cycles", c.cycles);
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.test_pose_count = j.value("test_pose_count", c.test_pose_count);
  c.noise_std = j.value("noise_std", c.noise_std);
  c.lambda = j.value("lambda", c.lambda);
  c.camera_height = j.value("camera_height", c.camera_height);
  c.bootstrap_radius = j.value("bootstrap_radius", c.bootstrap_radius);
  c.archive_bundles = j.value("archive_bundles", c.archive_bundles);

  if (c.methods.empty()) throw std::runtime_error("config lists no methods");
  if (c.seeds.empty()) throw std::runtime_error("config lists no seeds");
  return c;
}

void save_experiment_config(const ExperimentConfig& c, const std::string& path) {
  json j;
  j["name"] = c.name;
  j["output_dir"] = c.output_dir;
  j["scene_seed"] = c.scene_seed;
  j["scene"] = scene_to_json(c.scene);
  j["source_scene_seed"] = c.source_scene_seed;
  j["source_corpus_frames"] = c.source_corpus_frames;
  j["camera"] = {{"width", c.camera.width},
                 {"height", c.camera.height},
                 {"hfov_deg", c.camera.hfov * 180.0 / M_PI},
                 {"max_range", c.camera.max_range}};
  j["robot"] = {{"radius", c.robot.radius}, {"z_min", c.robot.z_min}, {"z_max", c.robot.z_max}};
  j["planner"] = {{"alpha_u", c.planner.gain.alpha_u},
                  {"d_min", c.planner.gain.d_min},
                  {"rays_x", c.planner.gain.rays_x},
                  {"rays_y", c.planner.gain.rays_y},
                  {"n_new", c.planner.n_new},
                  {"sample_radius", c.planner.sample_radius},
                  {"max_reject", c.planner.max_reject},
                  {"max_nodes", c.planner.max_nodes},
                  {"reeval_budget", c.planner.reeval_budget}};
  j["train"] = {{"bundle_size", c.train.bundle_size},
                {"epochs", c.train.epochs},
                {"lr_latent", c.train.lr_latent},
                {"lr_head", c.train.lr_head},
                {"replay_fraction", c.train.replay_fraction},
                {"val_fraction", c.train.val_fraction},
                {"patience", c.train.patience},
                {"supervision", to_string(c.train.supervision)},
                {"batch_pixels", c.train.batch_pixels},
                {"refit_samples", c.train.refit_samples},
                {"pca_dim", c.train.pca_dim}};
  j["pretrain_epochs"] = c.pretrain_epochs;
  json methods = json::array();
  for (GainMode m : c.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  j["seeds"] = c.seeds;
  j["cycles"] = c.cycles;
  j["latent_dim"] = c.latent_dim;
  j["test_pose_count"] = c.test_pose_count;
  j["noise_std"] = c.noise_std;
  j["lambda"] = c.lambda;
  j["camera_height"] = c.camera_height;
  j["bootstrap_radius"] = c.bootstrap_radius;
  j["archive_bundles"] = c.archive_bundles;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << j.dump(2) << "\n";
}

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics: " + path);
  out << "# adasim-metrics v1\n";
  const int k = rows.empty() ? 0 : static_cast<int>(rows[0].class_iou.size());
  out << "method,seed,cycle,miou,coverage,frames,val_loss,epochs_run";
  for (int c = 0; c < k; ++c) out << ",iou_" << c;
  out << "\n";
  char buf[160];
  for (const MetricRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%llu,%d,%.9g,%.9g,%ld,%.9g,%d", r.method.c_str(),
                  static_cast<unsigned long long>(r.seed), r.cycle, r.miou, r.coverage, r.frames,
                  r.val_loss, r.epochs_run);
    out << buf;
    for (int c = 0; c < r.class_iou.size(); ++c) {
      std::snprintf(buf, sizeof(buf), ",%.9g", r.class_iou[c]);
      out << buf;
    }
    out << "\n";
  }
}

std::vector<MetricRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# adasim-metrics", 0) != 0)
    throw std::runtime_error("not a metrics file: " + path);
  std::getline(in, line);  // column header

  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 8) throw std::runtime_error("short metrics row: " + line);
    MetricRow r;
    r.method = cells[0];
    r.seed = std::stoull(cells[1]);
    r.cycle = std::stoi(cells[2]);
    r.miou = std::stod(cells[3]);
    r.coverage = std::stod(cells[4]);
    r.frames = std::stol(cells[5]);
    r.val_loss = std::stod(cells[6]);
    r.epochs_run = std::stoi(cells[7]);
    r.class_iou.resize(static_cast<Eigen::Index>(cells.size()) - 8);
    for (size_t c = 8; c < cells.size(); ++c)
      r.class_iou[static_cast<Eigen::Index>(c) - 8] = std::stod(cells[c]);
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

void write_view_counts(const std::string& path, const GridDims& dims,
                       const std::vector<int>& counts) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write view counts: " + path);
  out << "adasim-viewcounts v1 " << dims.nx << " " << dims.ny << " " << dims.nz << "\n";
  for (size_t i = 0; i < counts.size(); ++i) out << counts[i] << (i + 1 == counts.size() ? "\n" : " ");
}

bool read_view_counts(const std::string& path, GridDims& dims, std::vector<int>& counts) {
  std::ifstream in(path);
  if (!in) return false;
  std::string magic, version;
  in >> magic >> version >> dims.nx >> dims.ny >> dims.nz;
  if (magic != "adasim-viewcounts" || version != "v1") return false;
  counts.assign(static_cast<size_t>(dims.nx) * dims.ny * dims.nz, 0);
  for (int& c : counts)
    if (!(in >> c)) return false;
  return true;
}

// Collapses per-voxel view counts into a top-down (x, y) heat map and draws
// the obstacle footprint (occupied above the floor layer) as the mask.
void write_heat_png(const std::string& path, const std::string& title, const GridDims& dims,
                    const std::vector<int>& counts, const std::vector<uint8_t>& occupied) {
  std::vector<double> flat(static_cast<size_t>(dims.nx) * dims.ny, 0.0);
  std::vector<char> mask(flat.size(), 0);
  for (int z = 0; z < dims.nz; ++z)
    for (int y = 0; y < dims.ny; ++y)
      for (int x = 0; x < dims.nx; ++x) {
        const int idx = (z * dims.ny + y) * dims.nx + x;
        flat[y * dims.nx + x] += counts[idx];
        if (z >= 1 && occupied[idx]) mask[y * dims.nx + x] = 1;
      }
  plot_heatmap(path, title, dims.nx, dims.ny, flat, mask);
}

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;
};

Stats mean_std(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.stddev += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(v.size()));
  return s;
}

std::vector<std::string> methods_in(const std::vector<MetricRow>& rows) {
  std::vector<std::string> methods;
  for (const MetricRow& r : rows)
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
      methods.push_back(r.method);
  return methods;
}

void make_plots(const std::string& dir, const std::vector<MetricRow>& rows) {
  if (rows.empty()) return;
  const std::vector<std::string> methods = methods_in(rows);
  int max_cycle = 0;
  for (const MetricRow& r : rows) max_cycle = std::max(max_cycle, r.cycle);

  // Mean +- std mIoU per cycle, one series per method.
  std::vector<PlotSeries> series;
  for (const std::string& m : methods) {
    PlotSeries s;
    s.label = m;
    for (int c = 0; c <= max_cycle; ++c) {
      std::vector<double> vals;
      for (const MetricRow& r : rows)
        if (r.method == m && r.cycle == c) vals.push_back(r.miou);
      if (vals.empty()) continue;
      const Stats st = mean_std(vals);
      s.x.push_back(c);
      s.y.push_back(st.mean);
      s.band.push_back(st.stddev);
    }
    if (!s.x.empty()) series.push_back(std::move(s));
  }
  plot_lines(dir + "/miou_vs_cycle.png", "MIOU BY LEARNING CYCLE (MEAN +- STD)", "CYCLE", "MIOU",
             series);

  // Per-class IoU change grouped by the pretrained IoU, averaged over seeds.
  const std::vector<double> edges = {0.3, 0.5};
  const std::vector<std::string> bin_labels = {"BELOW 0.3", "0.3 TO 0.5", "ABOVE 0.5"};
  std::vector<std::vector<double>> bar_values;
  for (const std::string& m : methods) {
    std::vector<std::vector<double>> deltas(edges.size() + 1);
    std::vector<uint64_t> seeds;
    for (const MetricRow& r : rows)
      if (r.method == m && std::find(seeds.begin(), seeds.end(), r.seed) == seeds.end())
        seeds.push_back(r.seed);
    for (uint64_t seed : seeds) {
      const MetricRow* first = nullptr;
      const MetricRow* last = nullptr;
      for (const MetricRow& r : rows) {
        if (r.method != m || r.seed != seed) continue;
        if (r.cycle == 0) first = &r;
        if (!last || r.cycle > last->cycle) last = &r;
      }
      if (!first || !last || first == last) continue;
      for (const IouBin& bin : group_improvement(first->class_iou, last->class_iou, edges)) {
        size_t b = 0;
        while (b < edges.size() && bin.hi > edges[b] + 1e-12) ++b;
        deltas[b].push_back(bin.mean_delta);
      }
    }
    std::vector<double> per_bin;
    for (const std::vector<double>& d : deltas)
      per_bin.push_back(d.empty() ? std::numeric_limits<double>::quiet_NaN() : mean_std(d).mean);
    bar_values.push_back(std::move(per_bin));
  }
  plot_bars(dir + "/group_improvement.png", "IOU CHANGE BY PRETRAINED IOU", "MEAN DELTA IOU",
            bin_labels, methods, bar_values);
}

void write_summary(const std::string& dir, const std::vector<MetricRow>& rows,
                   const std::vector<std::string>& failures) {
  std::ofstream out(dir + "/summary.txt");
  if (!out) throw std::runtime_error("cannot write summary");
  const std::vector<std::string> methods = methods_in(rows);
  int max_cycle = 0;
  for (const MetricRow& r : rows) max_cycle = std::max(max_cycle, r.cycle);

  char buf[256];
  out << "method        final mIoU (mean+-std)   delta vs pretrained   coverage\n";
  for (const std::string& m : methods) {
    std::vector<double> finals, deltas, covs;
    std::vector<uint64_t> seeds;
    for (const MetricRow& r : rows)
      if (r.method == m && std::find(seeds.begin(), seeds.end(), r.seed) == seeds.end())
        seeds.push_back(r.seed);
    for (uint64_t seed : seeds) {
      double first = 0.0, last = 0.0, cov = 0.0;
      int last_cycle = -1;
      for (const MetricRow& r : rows) {
        if (r.method != m || r.seed != seed) continue;
        if (r.cycle == 0) first = r.miou;
        if (r.cycle > last_cycle) {
          last_cycle = r.cycle;
          last = r.miou;
          cov = r.coverage;
        }
      }
      finals.push_back(last);
      deltas.push_back(last - first);
      covs.push_back(cov);
    }
    const Stats f = mean_std(finals), d = mean_std(deltas), c = mean_std(covs);
    std::snprintf(buf, sizeof(buf), "%-12s  %.4f +- %.4f         %+.4f               %.3f\n",
                  m.c_str(), f.mean, f.stddev, d.mean, c.mean);
    out << buf;
  }
  if (!failures.empty()) {
    out << "\nfailed runs:\n";
    for (const std::string& f : failures) out << "  " << f << "\n";
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const fs::path out_dir(config.output_dir);
  fs::create_directories(out_dir);
  save_experiment_config(config, (out_dir / "config.json").string());

  SceneConfig target_cfg = config.scene;
  target_cfg.domain = Domain::kTarget;
  const SceneModel target = generate_scene(config.scene_seed, target_cfg);
  save_scene(target, (out_dir / "scene.txt").string());

  SceneConfig source_cfg = config.scene;
  source_cfg.domain = Domain::kSource;
  const SceneModel source = generate_scene(config.source_scene_seed, source_cfg);

  // Shared across every method and seed: the replay corpus and the test set.
  std::cout << "rendering source corpus (" << config.source_corpus_frames << " frames)\n";
  std::vector<SensorFrame> corpus;
  {
    const auto poses = sample_test_poses(source, config.source_corpus_frames,
                                         derive_seed(config.scene_seed, "source-poses"),
                                         config.robot, config.camera_height);
    Rng rng = make_rng(config.scene_seed, "source-noise");
    for (size_t i = 0; i < poses.size(); ++i)
      corpus.push_back(render_frame(source, poses[i], config.camera, config.noise_std, rng,
                                    static_cast<int64_t>(i)));
  }
  std::vector<SensorFrame> test_frames;
  {
    const auto poses =
        sample_test_poses(target, config.test_pose_count, derive_seed(config.scene_seed, "test"),
                          config.robot, config.camera_height);
    Rng rng = make_rng(config.scene_seed, "test-noise");
    for (size_t i = 0; i < poses.size(); ++i)
      test_frames.push_back(render_frame(target, poses[i], config.camera, config.noise_std, rng,
                                         static_cast<int64_t>(i)));
  }

  TrainConfig pretrain_cfg = config.train;
  pretrain_cfg.epochs = config.pretrain_epochs;

  std::map<uint64_t, SegModel> pretrained;
  for (uint64_t seed : config.seeds) {
    std::cout << "pretraining seed " << seed << "\n";
    pretrained[seed] =
        pretrain_model(corpus, config.latent_dim, config.scene.num_classes, pretrain_cfg, seed);
    char name[64];
    std::snprintf(name, sizeof(name), "pretrained_seed%llu.txt",
                  static_cast<unsigned long long>(seed));
    save_checkpoint(pretrained[seed], (out_dir / name).string());
  }

  ExperimentResult result;
  std::ofstream timings((out_dir / "timings.csv").string());
  timings << "method,seed,wall_seconds\n";

  for (GainMode method : config.methods) {
    for (uint64_t seed : config.seeds) {
      const std::string method_name = to_string(method);
      char seed_name[32];
      std::snprintf(seed_name, sizeof(seed_name), "seed_%llu",
                    static_cast<unsigned long long>(seed));
      const fs::path run_dir = out_dir / method_name / seed_name;
      fs::create_directories(run_dir);

      MissionConfig mission;
      mission.camera = config.camera;
      mission.robot = config.robot;
      mission.planner = config.planner;
      mission.planner.gain.mode = method;
      mission.planner.gain.max_range = config.camera.max_range;
      mission.train = config.train;
      mission.cycles = config.cycles;
      mission.lambda = config.lambda;
      mission.noise_std = config.noise_std;
      mission.camera_height = config.camera_height;
      mission.bootstrap_radius = config.bootstrap_radius;
      mission.seed = seed;
      if (config.archive_bundles) {
        fs::create_directories(run_dir / "frames");
        mission.frame_dump_dir = (run_dir / "frames").string();
      }

      std::cout << "running " << method_name << " " << seed_name << std::flush;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const MissionResult run =
            run_adaptation(target, pretrained[seed], corpus, test_frames, mission);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << "  (" << static_cast<int>(secs) << "s)\n";
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%s,%llu,%.3f\n", method_name.c_str(),
                      static_cast<unsigned long long>(seed), secs);
        timings << buf << std::flush;

        if (run.safety_violations > 0)
          throw std::runtime_error("executed pose intersected occupied space");

        for (const CycleRecord& rec : run.records) {
          MetricRow row;
          row.method = method_name;
          row.seed = seed;
          row.cycle = rec.cycle;
          row.miou = rec.iou.miou;
          row.coverage = rec.coverage;
          row.frames = rec.frames_collected;
          row.val_loss = rec.val_loss;
          row.epochs_run = rec.epochs_run;
          row.class_iou = rec.iou.class_iou;
          result.rows.push_back(std::move(row));
        }

        write_trajectory_csv((run_dir / "trajectory.csv").string(), run.trajectory);
        write_training_log((run_dir / "training_log.csv").string(), run.train_log);
        run.map.export_text((run_dir / "map.txt").string());
        write_view_counts((run_dir / "view_counts.txt").string(), target.dims, run.view_counts);
        write_heat_png((run_dir / "heat.png").string(),
                       "VIEWS: " + method_name + " " + seed_name, target.dims, run.view_counts,
                       target.occupied);
        for (size_t c = 0; c < run.checkpoints.size(); ++c) {
          char name[64];
          std::snprintf(name, sizeof(name), "checkpoint_cycle%zu.txt", c + 1);
          save_checkpoint(run.checkpoints[c], (run_dir / name).string());
        }
      } catch (const std::exception& e) {
        std::cout << "  FAILED\n";
        result.failures.push_back(method_name + " seed " + std::to_string(seed) + ": " +
                                  e.what());
        std::cerr << "run failed: " << result.failures.back() << "\n";
      }
    }
  }

  write_metrics_csv((out_dir / "metrics.csv").string(), result.rows);
  make_plots(out_dir.string(), result.rows);
  write_summary(out_dir.string(), result.rows, result.failures);
  if (!result.failures.empty()) {
    std::ofstream fail((out_dir / "failures.txt").string());
    for (const std::string& f : result.failures) fail << f << "\n";
  }
  return result;
}

void plot_experiment(const std::string& output_dir) {
  const std::vector<MetricRow> rows = read_metrics_csv(output_dir + "/metrics.csv");
  make_plots(output_dir, rows);
  write_summary(output_dir, rows, {});

  // Rebuild heat maps for any run directory that kept its view counts.
  SceneModel scene;
  bool have_scene = false;
  if (fs::exists(output_dir + "/scene.txt")) {
    scene = load_scene(output_dir + "/scene.txt");
    have_scene = true;
  }
  for (const std::string& m : methods_in(rows)) {
    if (!fs::exists(fs::path(output_dir) / m)) continue;
    for (const auto& entry : fs::directory_iterator(fs::path(output_dir) / m)) {
      if (!entry.is_directory()) continue;
      GridDims dims;
      std::vector<int> counts;
      if (!read_view_counts((entry.path() / "view_counts.txt").string(), dims, counts)) continue;
      std::vector<uint8_t> occupied;
      if (have_scene && scene.dims.nx == dims.nx && scene.dims.ny == dims.ny &&
          scene.dims.nz == dims.nz)
        occupied = scene.occupied;
      else
        occupied.assign(counts.size(), 0);
      write_heat_png((entry.path() / "heat.png").string(),
                     "VIEWS: " + m + " " + entry.path().filename().string(), dims, counts,
                     occupied);
    }
  }
}

}  // namespace adasim
