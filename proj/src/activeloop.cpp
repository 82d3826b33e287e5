#include "segarena/activeloop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "segarena/evalbench.hpp"
#include "segarena/image_io.hpp"
#include "segarena/mask.hpp"

namespace segarena::loop {
namespace {

// Independent substream labels derived from the run seed.
constexpr std::uint64_t kStreamInit = 4;
constexpr std::uint64_t kStreamArena = 1;
constexpr std::uint64_t kStreamLoop = 2;
constexpr std::uint64_t kStreamTrain = 3;
constexpr std::uint64_t kStreamBootArena = 5;
constexpr std::uint64_t kStreamBootExamples = 6;
constexpr std::uint64_t kStreamOfflineInit = 7;
constexpr std::uint64_t kStreamOfflineTrain = 8;

std::string fmt_d(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string step_name(std::uint64_t step, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%08llu%s",
                static_cast<unsigned long long>(step), suffix);
  return buf;
}

/// Of the two frames of a motion pair, the one where the changed region is
/// the object rather than uncovered background: object pixels are close to
/// uniform, textured background is not.
const Image& flatter_frame(const Image& a, const Image& b, const MaskGrid& cc) {
  const auto spread = [&](const Image& img) {
    double mean[3] = {0, 0, 0};
    std::int64_t n = 0;
    for (Eigen::Index i = 0; i < cc.size(); ++i) {
      if (!cc.data()[i]) continue;
      mean[0] += img.r.data()[i];
      mean[1] += img.g.data()[i];
      mean[2] += img.b.data()[i];
      ++n;
    }
    for (double& m : mean) m /= static_cast<double>(n);
    double dev = 0.0;
    for (Eigen::Index i = 0; i < cc.size(); ++i) {
      if (!cc.data()[i]) continue;
      dev += std::max({std::abs(img.r.data()[i] - mean[0]),
                       std::abs(img.g.data()[i] - mean[1]),
                       std::abs(img.b.data()[i] - mean[2])});
    }
    return dev / static_cast<double>(n);
  };
  return spread(a) <= spread(b) ? a : b;
}

void append_positive_examples(const pseudo::TrainingExample& pos,
                              const Image& base, const pseudo::PseudoParams& pcfg,
                              Rng& rng, std::vector<pseudo::TrainingExample>& out) {
  out.push_back(pos);
  auto aug = pseudo::augment_positive(pos, rng, pcfg.n_augment);
  out.insert(out.end(), aug.begin(), aug.end());
  auto hard = pseudo::mine_hard_negatives(pos, base, rng, pcfg.n_hard_negatives, pcfg);
  out.insert(out.end(), hard.begin(), hard.end());
}

struct ManifestWriter {
  std::ofstream out;

  void open(const std::filesystem::path& path, std::uint64_t seed,
            const std::string& config_echo) {
    out.open(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest " + path.string());
    out << "segarena-run v1\n";
    out << "seed " << seed << "\n";
    out << "config-begin\n" << config_echo << "config-end\n";
    out.flush();
  }

  void record(const RecordedInteraction& r) {
    out << "rec " << r.step << " pick " << fmt_d(r.action.pick.x()) << " "
        << fmt_d(r.action.pick.y()) << " angle "
        << fmt_d(r.action.gripper_angle) << " place "
        << fmt_d(r.action.place.x()) << " " << fmt_d(r.action.place.y())
        << " label " << (r.positive ? "pos" : "neg");
    if (r.used_hypothesis) {
      out << " hyp 1 " << fmt_d(r.hyp_score) << " " << fmt_d(r.hyp_center.x())
          << " " << fmt_d(r.hyp_center.y()) << " " << fmt_d(r.hyp_scale);
    } else {
      out << " hyp 0";
    }
    out << " files " << r.before_ref << " " << r.mid_ref << " " << r.after_ref
        << " " << r.mask_ref << " " << r.place_mask_ref << "\n";
    out.flush();
  }

  void checkpoint(const CheckpointRef& c) {
    out << "ckpt " << c.step << " " << c.checkpoint << " " << c.scene << " "
        << c.loopstate << "\n";
    out.flush();
  }
};

struct LoopState {
  std::uint64_t step = 0;
  Rng loop_rng, train_rng;
  int bg_index = 0;
};

void save_loopstate(const std::filesystem::path& path, const LoopState& ls) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write loopstate " + path.string());
  out << "segarena-loopstate v1\n";
  out << "step " << ls.step << "\n";
  out << "loop-rng " << ls.loop_rng.state() << " " << ls.loop_rng.increment() << "\n";
  out << "train-rng " << ls.train_rng.state() << " " << ls.train_rng.increment() << "\n";
  out << "bg-index " << ls.bg_index << "\n";
}

LoopState load_loopstate(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read loopstate " + path.string());
  std::string line, kw;
  std::getline(in, line);
  if (line != "segarena-loopstate v1") {
    throw std::runtime_error("bad loopstate " + path.string());
  }
  LoopState ls;
  std::uint64_t s = 0, i = 0;
  in >> kw >> ls.step;
  in >> kw >> s >> i;
  ls.loop_rng = Rng::from_state(s, i);
  in >> kw >> s >> i;
  ls.train_rng = Rng::from_state(s, i);
  in >> kw >> ls.bg_index;
  if (!in) throw std::runtime_error("truncated loopstate " + path.string());
  return ls;
}

std::vector<pseudo::TrainingExample> derive_examples(
    const std::filesystem::path& run_dir, const RecordedInteraction& rec,
    std::uint64_t seed, const pseudo::PseudoParams& pcfg) {
  const Image before = read_image_ppm(run_dir / rec.before_ref);
  const Image mid = read_image_ppm(run_dir / rec.mid_ref);
  const Image after = read_image_ppm(run_dir / rec.after_ref);
  return pseudo::examples_for_interaction(before, mid, after, rec.action.pick,
                                          rec.action.place, pcfg, seed,
                                          rec.step);
}

}  // namespace

LoopParams LoopParams::from_config(const Config& cfg) {
  LoopParams lp;
  lp.bootstrap_steps = cfg.get_int("loop.bootstrap_steps");
  lp.bootstrap_train_steps = cfg.get_int("loop.bootstrap_train_steps");
  lp.epsilon = cfg.get_double("loop.epsilon");
  lp.update_interval = cfg.get_int("loop.update_interval");
  lp.steps_per_update = cfg.get_int("loop.steps_per_update");
  lp.reset_interval = cfg.get_int("loop.reset_interval");
  lp.bg_rotate_interval = cfg.get_int("loop.bg_rotate_interval");
  lp.checkpoint_interval = cfg.get_int("loop.checkpoint_interval");
  lp.batch = cfg.get_int("model.batch");
  lp.lr = cfg.get_double("model.lr");
  lp.momentum = cfg.get_double("model.momentum");
  lp.loss.mode = cfg.get_str("loop.loss") == "ce" ? model::LossMode::CE
                                                  : model::LossMode::RSL;
  lp.loss.rsl_b = cfg.get_double("rsl.b");
  lp.infer = model::InferParams::from_config(cfg, "loop");
  return lp;
}

sim::PickPlaceAction choose_interaction(const model::ModelParams& params,
                                        const Image& image, Rng& rng,
                                        const LoopParams& lp,
                                        std::optional<Hypothesis>* used) {
  if (used != nullptr) used->reset();
  const int w = image.width(), h = image.height();
  sim::PickPlaceAction action;
  bool explore = rng.uniform() < lp.epsilon;
  std::vector<Hypothesis> hyps;
  if (!explore) {
    hyps = model::infer_segments(params, image, lp.infer);
    if (hyps.empty()) explore = true;
  }
  if (explore) {
    action.pick = {rng.uniform(0.0, w - 1.0), rng.uniform(0.0, h - 1.0)};
    action.gripper_angle = rng.uniform(0.0, M_PI);
    action.place = {rng.uniform(0.0, w - 1.0), rng.uniform(0.0, h - 1.0)};
    return action;
  }
  const auto j = static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<int>(hyps.size()) - 1));
  const Hypothesis& hyp = hyps[j];
  action.pick = mask::centroid(hyp.mask);
  const double axis =
      mask_area(hyp.mask) >= 2 ? mask::principal_axis(hyp.mask) : 0.0;
  action.gripper_angle = std::fmod(axis + M_PI / 2.0, M_PI);
  action.place = {rng.uniform(0.0, w - 1.0), rng.uniform(0.0, h - 1.0)};
  if (used != nullptr) *used = hyp;
  return action;
}

model::ModelParams passive_bootstrap(sim::ArenaState& arena,
                                     model::ModelParams params, int steps,
                                     const Config& cfg, std::uint64_t seed) {
  if (steps <= 0) return params;
  const sim::SimParams simp = sim::SimParams::from_config(cfg);
  pseudo::PseudoParams pcfg = pseudo::PseudoParams::from_config(cfg);
  // Passive observation has no pick point: difference over the whole image.
  pcfg.window_frac = 2.0 * std::max(arena.width, arena.height) /
                     static_cast<double>(std::min(arena.width, arena.height));
  const Vec2 center(arena.width / 2.0, arena.height / 2.0);

  std::vector<pseudo::TrainingExample> store;
  const auto motion = sim::scripted_passive_motion(arena, steps, simp);
  for (std::size_t i = 0; i < motion.size(); ++i) {
    const sim::PassiveStep& stepped = motion[i];
    Rng ex_rng(Rng::mix(Rng::mix(seed, kStreamBootExamples), i), 12);
    const MaskGrid diff = mask::difference_mask(
        stepped.before, stepped.after, center,
        pcfg.window(arena.width, arena.height), pcfg.diff_threshold);
    if (!diff.any()) continue;
    const auto comps = mask::connected_components(diff, mask::Connectivity::Eight);
    const auto area_min = pcfg.area_threshold(arena.width, arena.height);
    for (std::size_t k = 0; k < comps.size() && k < 2; ++k) {
      if (mask_area(comps[k]) < area_min) break;  // sorted by size
      const Image& base = flatter_frame(stepped.before, stepped.after, comps[k]);
      auto exs = pseudo::make_examples(base, comps[k], mask::centroid(comps[k]),
                                       pcfg, &ex_rng, i);
      append_positive_examples(exs.front(), base, pcfg, ex_rng, store);
    }
  }
  if (store.empty()) return params;

  BatchSampler sampler;
  sampler.rebuild(store);
  model::SgdState sgd = model::SgdState::zeros_like(params);
  Rng train_rng(Rng::mix(seed, kStreamBootExamples + 100), 13);
  const LoopParams lp = LoopParams::from_config(cfg);
  const model::LossSpec ce{model::LossMode::CE, 1.0};
  for (int s = 0; s < lp.bootstrap_train_steps; ++s) {
    const auto batch = sampler.sample(store, lp.batch, train_rng);
    model::train_step(params, sgd, batch, lp.lr, lp.momentum, ce);
  }
  return params;
}

void BatchSampler::rebuild(const std::vector<pseudo::TrainingExample>& store) {
  pos_.clear();
  neg_.clear();
  for (std::size_t i = 0; i < store.size(); ++i) {
    (store[i].positive ? pos_ : neg_).push_back(static_cast<int>(i));
  }
}

model::TrainBatch BatchSampler::sample(
    const std::vector<pseudo::TrainingExample>& store, int batch_size,
    Rng& rng, std::vector<int>* indices) const {
  if (pos_.empty() && neg_.empty()) {
    throw std::runtime_error("BatchSampler: empty store");
  }
  model::TrainBatch batch;
  batch.examples.reserve(static_cast<std::size_t>(batch_size));
  if (indices != nullptr) indices->clear();
  for (int i = 0; i < batch_size; ++i) {
    const bool want_pos = (i % 2 == 0);
    const std::vector<int>& list =
        (want_pos && !pos_.empty()) || neg_.empty() ? pos_ : neg_;
    const int idx = list[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(list.size()) - 1))];
    batch.examples.push_back(&store[static_cast<std::size_t>(idx)]);
    if (indices != nullptr) indices->push_back(idx);
  }
  return batch;
}

// ---------------------------------------------------------------------------

RunManifest load_manifest(const std::filesystem::path& run_dir) {
  std::ifstream in(run_dir / "manifest");
  if (!in) throw std::runtime_error("cannot read manifest in " + run_dir.string());
  std::string line;
  std::getline(in, line);
  if (line != "segarena-run v1") {
    throw std::runtime_error("bad manifest in " + run_dir.string());
  }
  RunManifest m;
  std::getline(in, line);
  if (line.rfind("seed ", 0) != 0) throw std::runtime_error("manifest: missing seed");
  m.seed = std::stoull(line.substr(5));
  std::getline(in, line);
  if (line != "config-begin") throw std::runtime_error("manifest: missing config");
  while (std::getline(in, line) && line != "config-end") {
    m.config_echo += line;
    m.config_echo += '\n';
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "rec") {
      RecordedInteraction r;
      std::string kw, label;
      int hyp_flag = 0;
      ss >> r.step >> kw >> r.action.pick.x() >> r.action.pick.y() >> kw >>
          r.action.gripper_angle >> kw >> r.action.place.x() >>
          r.action.place.y() >> kw >> label >> kw >> hyp_flag;
      r.positive = label == "pos";
      r.used_hypothesis = hyp_flag != 0;
      if (r.used_hypothesis) {
        ss >> r.hyp_score >> r.hyp_center.x() >> r.hyp_center.y() >> r.hyp_scale;
      }
      ss >> kw >> r.before_ref >> r.mid_ref >> r.after_ref >> r.mask_ref >>
          r.place_mask_ref;
      if (!ss) throw std::runtime_error("manifest: bad record line: " + line);
      m.records.push_back(std::move(r));
    } else if (tag == "ckpt") {
      CheckpointRef c;
      ss >> c.step >> c.checkpoint >> c.scene >> c.loopstate;
      if (!ss) throw std::runtime_error("manifest: bad ckpt line: " + line);
      m.checkpoints.push_back(std::move(c));
    } else {
      throw std::runtime_error("manifest: unknown tag " + tag);
    }
  }
  return m;
}

std::vector<pseudo::TrainingExample> replay_dataset(
    const std::filesystem::path& run_dir, const RunManifest& manifest,
    std::size_t max_records) {
  const pseudo::PseudoParams pcfg = pseudo::PseudoParams::from_config(
      Config::from_echo(manifest.config_echo));
  std::vector<pseudo::TrainingExample> out;
  const std::size_t n = std::min(max_records, manifest.records.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto exs = derive_examples(run_dir, manifest.records[i], manifest.seed, pcfg);
    out.insert(out.end(), std::make_move_iterator(exs.begin()),
               std::make_move_iterator(exs.end()));
  }
  return out;
}

std::vector<pseudo::TrainingExample> replay_dataset(
    const std::filesystem::path& run_dir) {
  const RunManifest manifest = load_manifest(run_dir);
  return replay_dataset(run_dir, manifest,
                        std::numeric_limits<std::size_t>::max());
}

// ---------------------------------------------------------------------------

RunManifest run(std::uint64_t seed, std::uint64_t total_steps,
                const Config& cfg, const std::filesystem::path& out_dir) {
  if (total_steps < 1) throw std::invalid_argument("run: total_steps < 1");
  const sim::SimParams simp = sim::SimParams::from_config(cfg);
  const pseudo::PseudoParams pcfg = pseudo::PseudoParams::from_config(cfg);
  const LoopParams lp = LoopParams::from_config(cfg);
  const model::ArchConfig arch = model::ArchConfig::from_config(cfg);
  const auto& train_pool = sim::object_pool(sim::Split::Train);
  const std::string config_echo = cfg.echo();

  std::filesystem::create_directories(out_dir / "images");
  std::filesystem::create_directories(out_dir / "masks");
  std::filesystem::create_directories(out_dir / "checkpoints");

  RunManifest manifest;
  manifest.seed = seed;
  manifest.config_echo = config_echo;

  // Live state, either fresh or restored from the last checkpoint.
  model::ModelParams params;
  model::SgdState sgd;
  sim::ArenaState arena;
  LoopState ls;
  std::vector<pseudo::TrainingExample> store;
  std::uint64_t start_step = 0;

  const std::filesystem::path manifest_path = out_dir / "manifest";
  bool resumed = false;
  if (std::filesystem::exists(manifest_path)) {
    RunManifest prev = load_manifest(out_dir);
    if (prev.seed != seed || prev.config_echo != config_echo) {
      throw std::runtime_error("run: directory holds a different run (seed or config mismatch)");
    }
    if (!prev.checkpoints.empty()) {
      const CheckpointRef& last = prev.checkpoints.back();
      model::Checkpoint ck = model::load_checkpoint(out_dir / last.checkpoint);
      params = std::move(ck.params);
      sgd = std::move(ck.sgd);
      arena = sim::load_scene(out_dir / last.scene);
      ls = load_loopstate(out_dir / last.loopstate);
      start_step = last.step;
      // Records past the checkpoint get regenerated identically below.
      prev.records.resize(std::min<std::size_t>(prev.records.size(),
                                                static_cast<std::size_t>(start_step)));
      store = replay_dataset(out_dir, prev, prev.records.size());
      manifest.records = std::move(prev.records);
      manifest.checkpoints = std::move(prev.checkpoints);
      resumed = true;
    }
  }

  if (!resumed) {
    Rng init_rng(Rng::mix(seed, kStreamInit), 404);
    params = model::init_params(init_rng, arch);
    sgd = model::SgdState::zeros_like(params);
    ls.loop_rng = Rng(Rng::mix(seed, kStreamLoop), 202);
    ls.train_rng = Rng(Rng::mix(seed, kStreamTrain), 303);
    ls.bg_index = 0;

    if (lp.bootstrap_steps > 0) {
      sim::ArenaState boot = sim::spawn_scene(
          simp, evalbench::background_for(cfg, sim::Split::Train, 0),
          train_pool, Rng(Rng::mix(seed, kStreamBootArena), 505));
      params = passive_bootstrap(boot, std::move(params), lp.bootstrap_steps,
                                 cfg, seed);
    }
    arena = sim::spawn_scene(
        simp, evalbench::background_for(cfg, sim::Split::Train, ls.bg_index),
        train_pool, Rng(Rng::mix(seed, kStreamArena), 101));
  }

  // Rewrite the manifest head and the records we already trust; fresh runs
  // start empty. Appends below keep it in sync with the directory.
  ManifestWriter writer;
  writer.open(manifest_path, seed, config_echo);
  std::size_t next_ckpt = 0;
  std::vector<CheckpointRef> kept_ckpts;
  for (const RecordedInteraction& r : manifest.records) {
    while (next_ckpt < manifest.checkpoints.size() &&
           manifest.checkpoints[next_ckpt].step < r.step) {
      writer.checkpoint(manifest.checkpoints[next_ckpt]);
      kept_ckpts.push_back(manifest.checkpoints[next_ckpt]);
      ++next_ckpt;
    }
    writer.record(r);
  }
  while (next_ckpt < manifest.checkpoints.size() &&
         manifest.checkpoints[next_ckpt].step <= start_step) {
    writer.checkpoint(manifest.checkpoints[next_ckpt]);
    kept_ckpts.push_back(manifest.checkpoints[next_ckpt]);
    ++next_ckpt;
  }
  manifest.checkpoints = std::move(kept_ckpts);

  BatchSampler sampler;
  sampler.rebuild(store);

  for (std::uint64_t t = start_step + 1; t <= total_steps; ++t) {
    const Image current = sim::render(arena);
    std::optional<Hypothesis> used;
    const sim::PickPlaceAction action =
        choose_interaction(params, current, ls.loop_rng, lp, &used);
    const sim::InteractionOutcome outcome = sim::pick_place(arena, action, simp);

    pseudo::InteractionMasks masks;
    auto examples = pseudo::examples_for_interaction(
        outcome.before, outcome.mid, outcome.after, action.pick, action.place,
        pcfg, seed, t, &masks);

    RecordedInteraction rec;
    rec.step = t;
    rec.action = action;
    rec.positive = masks.from_pick.has_value();
    if (used.has_value()) {
      rec.used_hypothesis = true;
      rec.hyp_score = used->score;
      rec.hyp_center = used->center;
      rec.hyp_scale = used->scale;
    }
    rec.before_ref = "images/" + step_name(t, "_a.ppm");
    rec.mid_ref = "images/" + step_name(t, "_b.ppm");
    rec.after_ref = "images/" + step_name(t, "_c.ppm");
    write_image_ppm(outcome.before, out_dir / rec.before_ref);
    write_image_ppm(outcome.mid, out_dir / rec.mid_ref);
    write_image_ppm(outcome.after, out_dir / rec.after_ref);
    if (masks.from_pick.has_value()) {
      rec.mask_ref = "masks/" + step_name(t, "_pick.pgm");
      write_mask_pgm(*masks.from_pick, out_dir / rec.mask_ref);
    }
    if (masks.from_place.has_value()) {
      rec.place_mask_ref = "masks/" + step_name(t, "_place.pgm");
      write_mask_pgm(*masks.from_place, out_dir / rec.place_mask_ref);
    }
    writer.record(rec);
    manifest.records.push_back(rec);

    store.insert(store.end(), std::make_move_iterator(examples.begin()),
                 std::make_move_iterator(examples.end()));

    if (lp.update_interval > 0 && t % static_cast<std::uint64_t>(lp.update_interval) == 0) {
      sampler.rebuild(store);
      if (!sampler.empty()) {
        for (int s = 0; s < lp.steps_per_update; ++s) {
          const auto batch = sampler.sample(store, lp.batch, ls.train_rng);
          model::train_step(params, sgd, batch, lp.lr, lp.momentum, lp.loss);
        }
      }
    }
    if (lp.reset_interval > 0 && t % static_cast<std::uint64_t>(lp.reset_interval) == 0) {
      sim::reset_sweep(arena, simp);
    }
    if (lp.bg_rotate_interval > 0 && t % static_cast<std::uint64_t>(lp.bg_rotate_interval) == 0) {
      ls.bg_index += 1;
      arena = sim::spawn_scene(
          simp, evalbench::background_for(cfg, sim::Split::Train, ls.bg_index),
          train_pool, arena.rng);
    }
    const bool at_mark =
        lp.checkpoint_interval > 0 &&
        t % static_cast<std::uint64_t>(lp.checkpoint_interval) == 0;
    if (at_mark || t == total_steps) {
      CheckpointRef c;
      c.step = t;
      c.checkpoint = "checkpoints/" + step_name(t, ".ckpt");
      c.scene = "checkpoints/" + step_name(t, ".scene");
      c.loopstate = "checkpoints/" + step_name(t, ".loopstate");
      model::save_checkpoint(out_dir / c.checkpoint, params, sgd);
      sim::save_scene(arena, out_dir / c.scene);
      ls.step = t;
      save_loopstate(out_dir / c.loopstate, ls);
      writer.checkpoint(c);
      manifest.checkpoints.push_back(c);
    }
  }
  return manifest;
}

// ---------------------------------------------------------------------------

model::ModelParams train_offline(
    const std::vector<pseudo::TrainingExample>& data, const Config& cfg,
    const model::LossSpec& loss, std::uint64_t seed, int steps,
    std::uint64_t* batch_checksum) {
  const model::ArchConfig arch = model::ArchConfig::from_config(cfg);
  Rng init_rng(Rng::mix(seed, kStreamOfflineInit), 707);
  model::ModelParams params = model::init_params(init_rng, arch);
  model::SgdState sgd = model::SgdState::zeros_like(params);
  BatchSampler sampler;
  sampler.rebuild(data);
  if (sampler.empty()) throw std::runtime_error("train_offline: no data");

  Rng train_rng(Rng::mix(seed, kStreamOfflineTrain), 808);
  const double lr = cfg.get_double("model.lr");
  const double momentum = cfg.get_double("model.momentum");
  const int batch_size = cfg.get_int("model.batch");
  std::uint64_t checksum = 0;
  std::vector<int> indices;
  for (int s = 0; s < steps; ++s) {
    const auto batch = sampler.sample(data, batch_size, train_rng, &indices);
    for (const int idx : indices) {
      checksum = Rng::mix(checksum, static_cast<std::uint64_t>(idx));
    }
    model::train_step(params, sgd, batch, lr, momentum, loss);
  }
  if (batch_checksum != nullptr) *batch_checksum = checksum;
  return params;
}

}  // namespace segarena::loop
