#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "segarena/activeloop.hpp"
#include "segarena/config.hpp"
#include "segarena/evalbench.hpp"
#include "segarena/image_io.hpp"
#include "segarena/model.hpp"
#include "segarena/rearrange.hpp"
#include "segarena/sim.hpp"

namespace fs = std::filesystem;
using namespace segarena;

namespace {

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

Config build_config(const std::string& config_path,
                    const std::vector<std::string>& sets) {
  Config cfg = Config::defaults();
  if (!config_path.empty()) cfg.load_file(config_path);
  for (const std::string& pair : sets) cfg.set_pair(pair);
  return cfg;
}

std::vector<evalbench::EvalScene> load_scene_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".scene") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw std::runtime_error("no .scene files in " + dir.string());
  }
  std::vector<evalbench::EvalScene> scenes;
  scenes.reserve(files.size());
  for (const fs::path& f : files) {
    scenes.push_back(evalbench::scene_from_state(sim::load_scene(f)));
  }
  return scenes;
}

sim::Split parse_split(const std::string& s) {
  if (s == "train") return sim::Split::Train;
  if (s == "val") return sim::Split::Val;
  if (s == "test") return sim::Split::Test;
  throw std::runtime_error("unknown split '" + s + "' (train|val|test)");
}

int cmd_collect(std::uint64_t seed, std::uint64_t steps, const Config& cfg,
                const fs::path& out) {
  const loop::RunManifest manifest = loop::run(seed, steps, cfg, out);
  std::int64_t positives = 0;
  for (const auto& r : manifest.records) positives += r.positive ? 1 : 0;
  std::cout << "collected " << manifest.records.size() << " interactions ("
            << positives << " positive) into " << out.string() << "\n";
  return 0;
}

int cmd_train(const fs::path& run_dir, std::uint64_t seed,
              const std::string& loss_name, int steps,
              const std::vector<std::string>& sets, const fs::path& out) {
  const loop::RunManifest manifest = loop::load_manifest(run_dir);
  Config cfg = Config::from_echo(manifest.config_echo);
  for (const std::string& pair : sets) cfg.set_pair(pair);
  model::LossSpec loss;
  loss.mode = loss_name == "ce" ? model::LossMode::CE : model::LossMode::RSL;
  loss.rsl_b = cfg.get_double("rsl.b");

  const auto data = loop::replay_dataset(run_dir, manifest,
                                         manifest.records.size());
  std::cout << "replayed " << data.size() << " examples from "
            << manifest.records.size() << " interactions\n";
  const model::ModelParams params =
      loop::train_offline(data, cfg, loss, seed, steps);
  model::save_checkpoint(out, params, model::SgdState::zeros_like(params));
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_scenes(std::uint64_t seed, int count, const std::string& objects,
               const std::string& backgrounds, const Config& cfg,
               const fs::path& out) {
  fs::create_directories(out);
  const auto scenes_split = parse_split(objects);
  const auto bg_split = parse_split(backgrounds);
  const sim::SimParams simp = sim::SimParams::from_config(cfg);
  const auto& pool = sim::object_pool(scenes_split);
  for (int i = 0; i < count; ++i) {
    const auto bg = evalbench::background_for(cfg, bg_split, i);
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(i)), 21);
    const sim::ArenaState state = sim::spawn_scene(simp, bg, pool, rng);
    char name[32];
    std::snprintf(name, sizeof(name), "%04d.scene", i);
    sim::save_scene(state, out / name);
  }
  std::cout << "wrote " << count << " scenes to " << out.string() << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, bool baseline, bool untrained,
             std::uint64_t seed, const fs::path& scenes_dir,
             const std::vector<double>& ious, bool matrix, const Config& cfg,
             const fs::path& out) {
  fs::create_directories(out);
  std::optional<model::ModelParams> params;
  if (!checkpoint.empty()) {
    params = model::load_checkpoint(checkpoint).params;
  } else if (untrained) {
    Rng rng(Rng::mix(seed, 99), 404);
    params = model::init_params(rng, model::ArchConfig::from_config(cfg));
  } else if (!baseline) {
    throw std::runtime_error("eval needs --checkpoint, --baseline or --untrained");
  }

  const auto scenes = load_scene_dir(scenes_dir);
  std::vector<std::vector<Hypothesis>> preds;
  preds.reserve(scenes.size());
  const model::InferParams infer = model::InferParams::from_config(cfg, "eval");
  for (const auto& scene : scenes) {
    if (params.has_value()) {
      preds.push_back(model::infer_segments(*params, scene.image, infer));
    } else {
      preds.push_back(evalbench::color_threshold_baseline(
          scene.image, cfg.get_double("eval.baseline_threshold"),
          cfg.get_double("eval.baseline_min_area_frac"), infer.nms_thresh));
    }
  }

  std::vector<std::vector<std::string>> ap_rows;
  std::vector<evalbench::LineChart> charts;
  for (const double iou : ious) {
    const auto res = evalbench::average_precision(scenes, preds, iou);
    std::cout << "AP@" << fmt_g(iou) << " = " << fmt_g(res.ap) << "\n";
    ap_rows.push_back({fmt_g(iou), fmt_g(res.ap)});
    evalbench::LineChart pr;
    pr.name = "pr_iou" + std::to_string(static_cast<int>(iou * 100));
    pr.x_label = "recall";
    pr.y_label = "precision";
    evalbench::Series s;
    s.name = "pr";
    for (const auto& p : res.pr) s.points.emplace_back(p.recall, p.precision);
    pr.series.push_back(std::move(s));
    charts.push_back(std::move(pr));
  }
  evalbench::write_csv(out / "ap.csv", {"iou", "ap"}, ap_rows);

  const auto levels = cfg.get_list("eval.precision_levels");
  const auto recall =
      evalbench::recall_at_precision(scenes, preds, ious.front(), levels);
  std::vector<std::vector<std::string>> recall_rows;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    recall_rows.push_back(
        {fmt_g(levels[i]), recall[i] ? fmt_g(*recall[i]) : "undefined"});
    std::cout << "recall@p" << fmt_g(levels[i]) << " = "
              << (recall[i] ? fmt_g(*recall[i]) : "undefined") << "\n";
  }
  evalbench::write_csv(out / "recall.csv", {"precision_level", "recall"},
                       recall_rows);

  std::vector<evalbench::BarChart> bar_charts;
  if (matrix) {
    if (!params.has_value()) {
      throw std::runtime_error("--matrix needs a model (checkpoint/untrained)");
    }
    const auto gm = evalbench::generalization_matrix(*params, cfg, seed);
    std::vector<std::vector<std::string>> rows;
    const char* names[2] = {"train", "test"};
    for (int oi = 0; oi < 2; ++oi) {
      for (int bi = 0; bi < 2; ++bi) {
        rows.push_back({names[oi], names[bi], fmt_g(gm.cells[oi][bi].ap30),
                        fmt_g(gm.cells[oi][bi].ap50)});
      }
    }
    rows.push_back({"object_drop", "", fmt_g(gm.object_drop30), fmt_g(gm.object_drop50)});
    rows.push_back({"background_drop", "", fmt_g(gm.background_drop30), fmt_g(gm.background_drop50)});
    evalbench::write_csv(out / "generalization.csv",
                         {"objects", "backgrounds", "ap30", "ap50"}, rows);
    evalbench::BarChart bars;
    bars.name = "generalization_drops";
    bars.y_label = "AP drop";
    bars.bars = {{"obj@0.3", gm.object_drop30},
                 {"bg@0.3", gm.background_drop30},
                 {"obj@0.5", gm.object_drop50},
                 {"bg@0.5", gm.background_drop50}};
    bar_charts.push_back(std::move(bars));
  }
  evalbench::emit_report(charts, bar_charts, out);
  return 0;
}

int cmd_rearrange(const std::string& checkpoint, bool oracle,
                  const std::string& scene_file, const std::string& target_file,
                  int episodes, std::uint64_t seed, int displaced,
                  const std::string& objects, const std::string& backgrounds,
                  bool random_controller, const Config& cfg,
                  const fs::path& out) {
  fs::create_directories(out);
  std::optional<model::ModelParams> params;
  if (!oracle) {
    if (checkpoint.empty()) {
      throw std::runtime_error("rearrange needs --checkpoint or --oracle");
    }
    params = model::load_checkpoint(checkpoint).params;
  }
  const rearrange::RearrangeParams rp = rearrange::RearrangeParams::from_config(cfg);
  const sim::SimParams simp = rp.sim;

  std::vector<std::vector<std::string>> rows;
  int successes = 0;
  const auto run_episode = [&](sim::ArenaState state,
                               const sim::ArenaState& target, int index) {
    rearrange::EpisodeOutcome outcome;
    if (random_controller) {
      Rng rng(Rng::mix(seed, 7000 + static_cast<std::uint64_t>(index)), 31);
      outcome = rearrange::random_controller(state, target, rp, rng);
    } else {
      outcome = rearrange::execute(state, params, target, rp);
    }
    double worst = 0.0;
    for (const auto& [id, d] : outcome.final_displacements) worst = std::max(worst, d);
    rows.push_back({std::to_string(index),
                    outcome.matched_success ? "1" : "0",
                    outcome.true_success ? "1" : "0",
                    std::to_string(outcome.interactions), fmt_g(worst)});
    if (outcome.true_success) ++successes;
  };

  if (!scene_file.empty()) {
    if (target_file.empty()) {
      throw std::runtime_error("--scene requires --target-scene");
    }
    run_episode(sim::load_scene(scene_file), sim::load_scene(target_file), 0);
  } else {
    const auto obj_split = parse_split(objects);
    const auto bg_split = parse_split(backgrounds);
    const auto& pool = sim::object_pool(obj_split);
    for (int i = 0; i < episodes; ++i) {
      Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(i)), 41);
      sim::ArenaState scene = sim::spawn_scene(
          simp, evalbench::background_for(cfg, bg_split, i), pool, rng);
      Rng target_rng(Rng::mix(seed, 5000 + static_cast<std::uint64_t>(i)), 42);
      const sim::ArenaState target = rearrange::make_target(
          scene, displaced, 4.0 * rp.tolerance_px, simp.spawn_gap, target_rng);
      run_episode(std::move(scene), target, i);
    }
  }
  evalbench::write_csv(out / "rearrange.csv",
                       {"episode", "matched_success", "true_success",
                        "interactions", "worst_displacement"},
                       rows);
  std::cout << "success " << successes << "/" << rows.size() << "\n";
  return 0;
}

int cmd_report(const fs::path& run_dir, const fs::path& scenes_dir, double iou,
               bool matrix, std::uint64_t seed,
               const std::vector<std::string>& sets, const fs::path& out) {
  const loop::RunManifest manifest = loop::load_manifest(run_dir);
  Config cfg = Config::from_echo(manifest.config_echo);
  for (const std::string& pair : sets) cfg.set_pair(pair);
  const auto scenes = load_scene_dir(scenes_dir);
  const model::InferParams infer = model::InferParams::from_config(cfg, "eval");
  const auto levels = cfg.get_list("eval.precision_levels");

  evalbench::LineChart ap_chart{"ap_vs_interactions", "interactions", "AP", {}};
  evalbench::Series ap_series{"AP@" + fmt_g(iou), {}};
  evalbench::LineChart recall_chart{"recall_vs_interactions", "interactions", "recall", {}};
  std::vector<evalbench::Series> recall_series;
  for (const double level : levels) recall_series.push_back({"p>=" + fmt_g(level), {}});
  evalbench::LineChart pr_chart{"pr_final", "recall", "precision", {}};

  for (const auto& ck : manifest.checkpoints) {
    const auto params = model::load_checkpoint(run_dir / ck.checkpoint).params;
    std::vector<std::vector<Hypothesis>> preds;
    preds.reserve(scenes.size());
    for (const auto& scene : scenes) {
      preds.push_back(model::infer_segments(params, scene.image, infer));
    }
    const auto res = evalbench::average_precision(scenes, preds, iou);
    ap_series.points.emplace_back(static_cast<double>(ck.step), res.ap);
    const auto recall = evalbench::recall_at_precision(scenes, preds, iou, levels);
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (recall[i]) {
        recall_series[i].points.emplace_back(static_cast<double>(ck.step), *recall[i]);
      }
    }
    if (&ck == &manifest.checkpoints.back()) {
      evalbench::Series pr{"pr", {}};
      for (const auto& p : res.pr) pr.points.emplace_back(p.recall, p.precision);
      pr_chart.series.push_back(std::move(pr));

      std::vector<evalbench::BarChart> bars;
      if (matrix) {
        const auto gm = evalbench::generalization_matrix(params, cfg, seed);
        evalbench::BarChart bc;
        bc.name = "generalization_drops";
        bc.y_label = "AP drop";
        bc.bars = {{"obj@0.3", gm.object_drop30},
                   {"bg@0.3", gm.background_drop30},
                   {"obj@0.5", gm.object_drop50},
                   {"bg@0.5", gm.background_drop50}};
        bars.push_back(std::move(bc));
        evalbench::emit_report({}, bars, out);
      }
    }
  }
  ap_chart.series.push_back(std::move(ap_series));
  recall_chart.series = std::move(recall_series);
  evalbench::emit_report({ap_chart, recall_chart, pr_chart}, {}, out);
  std::cout << "report written to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segarena: instance segmentation learned from simulated pick-and-place interaction"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  std::string out;

  auto* collect = app.add_subcommand("collect", "run the interaction loop and persist a run directory");
  collect->add_option("--seed", seed, "run seed")->required();
  collect->add_option("--steps", steps, "number of interactions")->required();
  collect->add_option("--config", config_path, "config file (key=value lines)");
  collect->add_option("--set", sets, "config override key=value");
  collect->add_option("--out", out, "run directory")->required();

  std::string run_dir, loss_name = "rsl", ckpt_out;
  std::uint64_t train_seed = 0;
  int train_steps = 600;
  auto* train = app.add_subcommand("train", "offline training on a replayed run");
  train->add_option("--run", run_dir, "run directory to replay")->required();
  train->add_option("--seed", train_seed, "training seed")->required();
  train->add_option("--loss", loss_name, "mask-head loss: ce or rsl")
      ->check(CLI::IsMember({"ce", "rsl"}));
  train->add_option("--steps", train_steps, "gradient steps");
  train->add_option("--set", sets, "config override key=value");
  train->add_option("--out", ckpt_out, "output checkpoint")->required();

  std::string objects = "test", backgrounds = "test";
  int count = 10;
  auto* scenes = app.add_subcommand("scenes", "generate evaluation scene manifests");
  scenes->add_option("--seed", seed, "scene seed")->required();
  scenes->add_option("--count", count, "number of scenes");
  scenes->add_option("--objects", objects, "object split: train|val|test");
  scenes->add_option("--backgrounds", backgrounds, "background split: train|val|test");
  scenes->add_option("--config", config_path, "config file");
  scenes->add_option("--set", sets, "config override key=value");
  scenes->add_option("--out", out, "output directory")->required();

  std::string checkpoint, scenes_dir;
  std::vector<double> ious{0.3, 0.5};
  bool baseline = false, untrained = false, matrix = false;
  auto* eval = app.add_subcommand("eval", "AP / PR / recall evaluation on scene manifests");
  eval->add_option("--checkpoint", checkpoint, "model checkpoint");
  eval->add_flag("--baseline", baseline, "evaluate the colour-threshold baseline");
  eval->add_flag("--untrained", untrained, "evaluate a randomly initialized model");
  eval->add_option("--seed", seed, "seed for --untrained / --matrix");
  eval->add_option("--scenes", scenes_dir, "directory of .scene manifests")->required();
  eval->add_option("--iou", ious, "IoU thresholds")->delimiter(',');
  eval->add_flag("--matrix", matrix, "also compute the 2x2 generalization matrix");
  eval->add_option("--config", config_path, "config file");
  eval->add_option("--set", sets, "config override key=value");
  eval->add_option("--out", out, "output directory")->required();

  std::string scene_file, target_file;
  int episodes = 20, displaced = 3;
  bool oracle = false, random_ctrl = false;
  std::string r_objects = "train", r_backgrounds = "train";
  auto* rearr = app.add_subcommand("rearrange", "object rearrangement episodes");
  rearr->add_option("--checkpoint", checkpoint, "model checkpoint");
  rearr->add_flag("--oracle", oracle, "use simulator true masks instead of the model");
  rearr->add_flag("--random-controller", random_ctrl, "no-perception random pick/place control arm");
  rearr->add_option("--scene", scene_file, "initial scene manifest");
  rearr->add_option("--target-scene", target_file, "target scene manifest");
  rearr->add_option("--seeds", episodes, "number of generated episodes");
  rearr->add_option("--seed", seed, "episode seed")->required();
  rearr->add_option("--displaced", displaced, "objects displaced in generated targets");
  rearr->add_option("--objects", r_objects, "object split for generated episodes");
  rearr->add_option("--backgrounds", r_backgrounds, "background split for generated episodes");
  rearr->add_option("--config", config_path, "config file");
  rearr->add_option("--set", sets, "config override key=value");
  rearr->add_option("--out", out, "output directory")->required();

  double report_iou = 0.3;
  auto* report = app.add_subcommand("report", "AP/recall-vs-interactions curves from a run's checkpoints");
  report->add_option("--run", run_dir, "run directory")->required();
  report->add_option("--scenes", scenes_dir, "directory of .scene manifests")->required();
  report->add_option("--iou", report_iou, "IoU threshold for the curves");
  report->add_flag("--matrix", matrix, "also compute the generalization matrix");
  report->add_option("--seed", seed, "seed for --matrix");
  report->add_option("--set", sets, "config override key=value");
  report->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (collect->parsed()) {
      return cmd_collect(seed, steps, build_config(config_path, sets), out);
    }
    if (train->parsed()) {
      return cmd_train(run_dir, train_seed, loss_name, train_steps, sets, ckpt_out);
    }
    if (scenes->parsed()) {
      return cmd_scenes(seed, count, objects, backgrounds,
                        build_config(config_path, sets), out);
    }
    if (eval->parsed()) {
      return cmd_eval(checkpoint, baseline, untrained, seed, scenes_dir, ious,
                      matrix, build_config(config_path, sets), out);
    }
    if (rearr->parsed()) {
      return cmd_rearrange(checkpoint, oracle, scene_file, target_file,
                           episodes, seed, displaced, r_objects, r_backgrounds,
                           random_ctrl, build_config(config_path, sets), out);
    }
    if (report->parsed()) {
      return cmd_report(run_dir, scenes_dir, report_iou, matrix, seed, sets, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
