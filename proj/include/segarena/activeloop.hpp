#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "segarena/config.hpp"
#include "segarena/model.hpp"
#include "segarena/pseudolabel.hpp"
#include "segarena/sim.hpp"

namespace segarena::loop {

/// The interaction loop: bootstrap passively, then repeatedly hypothesize,
/// poke, label by frame differencing, and periodically update the model,
/// reset the arena and rotate backgrounds. Every step persists to the run
/// directory, and the whole run replays bit-exactly from (seed, config).

struct LoopParams {
  int bootstrap_steps = 150;
  int bootstrap_train_steps = 200;
  double epsilon = 0.2;
  int update_interval = 50;
  int steps_per_update = 100;
  int reset_interval = 25;
  int bg_rotate_interval = 500;
  int checkpoint_interval = 250;
  int batch = 32;
  double lr = 0.01;
  double momentum = 0.9;
  model::LossSpec loss;
  model::InferParams infer;  // collection-time hypothesis generation

  static LoopParams from_config(const Config& cfg);
};

struct RecordedInteraction {
  std::uint64_t step = 0;
  sim::PickPlaceAction action;
  bool positive = false;
  bool used_hypothesis = false;
  double hyp_score = 0.0;
  Vec2 hyp_center = Vec2::Zero();
  double hyp_scale = 0.0;
  std::string before_ref, mid_ref, after_ref;
  std::string mask_ref = "-";        // pick-phase mask, "-" when absent
  std::string place_mask_ref = "-";  // place-phase mask, "-" when absent
};

struct CheckpointRef {
  std::uint64_t step = 0;
  std::string checkpoint, scene, loopstate;  // paths relative to the run dir
};

struct RunManifest {
  std::uint64_t seed = 0;
  std::string config_echo;
  std::vector<RecordedInteraction> records;
  std::vector<CheckpointRef> checkpoints;
};

/// Run (or resume) a collection run of `total_steps` interactions in
/// `out_dir`. A directory holding a compatible partial run (same seed and
/// config, with a saved checkpoint) continues from the last checkpoint and
/// reproduces exactly what an uninterrupted run would have written.
RunManifest run(std::uint64_t seed, std::uint64_t total_steps,
                const Config& cfg, const std::filesystem::path& out_dir);

RunManifest load_manifest(const std::filesystem::path& run_dir);

/// Deterministic re-materialization of the run's training examples from its
/// persisted images; identical to what the live loop trained on.
std::vector<pseudo::TrainingExample> replay_dataset(
    const std::filesystem::path& run_dir);
std::vector<pseudo::TrainingExample> replay_dataset(
    const std::filesystem::path& run_dir, const RunManifest& manifest,
    std::size_t max_records);

/// Watch scripted object motion, extract masks by frame differencing, and
/// pretrain with plain cross-entropy. steps = motion pairs observed;
/// steps == 0 returns the parameters untouched.
model::ModelParams passive_bootstrap(sim::ArenaState& arena,
                                     model::ModelParams params, int steps,
                                     const Config& cfg, std::uint64_t seed);

/// One action choice: with probability epsilon (or when no hypothesis
/// survives) a uniform random pick/angle/place; otherwise a uniformly chosen
/// hypothesis, picked at its centroid with the gripper perpendicular to its
/// principal axis, placed uniformly.
sim::PickPlaceAction choose_interaction(const model::ModelParams& params,
                                        const Image& image, Rng& rng,
                                        const LoopParams& lp,
                                        std::optional<Hypothesis>* used);

/// Uniform replay sampling with a 1:1 positive/negative target mix
/// (falls back to whichever class exists).
class BatchSampler {
 public:
  void rebuild(const std::vector<pseudo::TrainingExample>& store);
  model::TrainBatch sample(const std::vector<pseudo::TrainingExample>& store,
                           int batch_size, Rng& rng,
                           std::vector<int>* indices = nullptr) const;
  bool empty() const { return pos_.empty() && neg_.empty(); }

 private:
  std::vector<int> pos_, neg_;
};

/// Offline training on a replayed dataset from a fresh init. The batch
/// sequence depends only on (data, seed), never on the loss mode, so loss
/// ablations consume identical batches; `batch_checksum` captures that
/// sequence for verification.
model::ModelParams train_offline(
    const std::vector<pseudo::TrainingExample>& data, const Config& cfg,
    const model::LossSpec& loss, std::uint64_t seed, int steps,
    std::uint64_t* batch_checksum = nullptr);

}  // namespace segarena::loop
