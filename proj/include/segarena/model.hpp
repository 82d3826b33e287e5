#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "segarena/config.hpp"
#include "segarena/pseudolabel.hpp"
#include "segarena/rng.hpp"
#include "segarena/types.hpp"

namespace segarena::model {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Trainable segmenter: a three-layer conv trunk shared by a patch-level
/// objectness head and a coarse per-pixel mask head (upsampled to patch
/// resolution by nearest neighbour). Gradients are hand-derived; convolution
/// runs as im2col + matrix products, so Eigen carries all the numerics.

struct ArchConfig {
  int patch = 48;
  int c1 = 8, c2 = 16, c3 = 24;
  int kernel = 3;
  int mask_grid = 12;
  double init_sigma_scale = 1.0;

  static ArchConfig from_config(const Config& cfg);
  void validate() const;  // patch divisible by 8 and by mask_grid

  int pooled_side() const { return patch / 8; }
  int feature_dim() const { return c3 * pooled_side() * pooled_side(); }
  int upsample_factor() const { return patch / mask_grid; }
};

struct ConvLayer {
  Matrix W;  // out_c x (in_c * k * k)
  Vector b;  // out_c
};

struct ModelParams {
  ArchConfig arch;
  ConvLayer conv1, conv2, conv3;
  Vector score_w;  // feature_dim
  double score_b = 0.0;
  Matrix mask_w;   // mask_grid^2 x feature_dim
  Vector mask_b;   // mask_grid^2
  std::int64_t step = 0;

  bool all_finite() const;
};

/// Velocity buffers for momentum SGD; shapes mirror ModelParams.
struct SgdState {
  ConvLayer conv1, conv2, conv3;
  Vector score_w;
  double score_b = 0.0;
  Matrix mask_w;
  Vector mask_b;

  static SgdState zeros_like(const ModelParams& p);
};

/// Small-variance fan-in-scaled init; deterministic given the generator.
ModelParams init_params(Rng& rng, const ArchConfig& arch);

struct Forward {
  double score_logit = 0.0;
  double score = 0.0;       // sigmoid(score_logit)
  LogitGrid mask_logits;    // patch x patch
};

/// Single-patch forward pass. Throws on a patch size mismatch.
Forward forward(const ModelParams& params, const Image& patch);

enum class LossMode { CE, RSL };

struct LossSpec {
  LossMode mode = LossMode::CE;
  double rsl_b = 0.7;
};

struct TrainBatch {
  std::vector<const pseudo::TrainingExample*> examples;
};

struct Losses {
  double score_loss = 0.0;  // mean over the batch
  double mask_loss = 0.0;   // mean over positive examples (0 if none)
};

/// Losses without touching parameters (used for reporting and the
/// finite-difference checks).
Losses batch_loss(const ModelParams& params, const TrainBatch& batch,
                  const LossSpec& loss);

/// One momentum-SGD step. The score head trains on every example, the mask
/// head on positives only (plain cross-entropy or the robust set loss).
/// Returns the losses evaluated before the update. Throws if a loss goes
/// non-finite.
Losses train_step(ModelParams& params, SgdState& sgd, const TrainBatch& batch,
                  double lr, double momentum, const LossSpec& loss);

// ---------------------------------------------------------------------------
// Sliding-window pyramid inference

/// Scale i of the pyramid: 2^(i/4 - 1.25). Index 5 is exactly 1.
double pyramid_scale(int index);

struct PyramidParams {
  int patch = 48;
  double stride_frac = 1.0 / 12.0;  // of the patch side
  std::vector<int> scale_indices = {0, 1, 2, 3, 4, 5, 6};

  int stride() const;
};

struct PyramidLevel {
  int scale_index = 0;
  double scale = 1.0;
  int scaled_w = 0, scaled_h = 0;
  std::vector<Vec2> centers;  // patch centres in scaled coordinates
};

/// Patch placements over the rescaled image at every configured scale.
/// Levels too small to fit one patch are dropped.
std::vector<PyramidLevel> build_pyramid(int width, int height,
                                        const PyramidParams& params);

struct InferParams {
  PyramidParams pyramid;
  double score_thresh = 0.5;
  double nms_thresh = 0.5;

  /// prefix is "loop" or "eval": selects that stage's pyramid subset.
  static InferParams from_config(const Config& cfg, const std::string& prefix);
};

/// Forward every pyramid patch, keep scores above threshold, binarize mask
/// logits at zero, map masks back to full-image coordinates, then NMS.
/// Output is sorted by descending score and independent of evaluation order.
std::vector<Hypothesis> infer_segments(const ModelParams& params,
                                       const Image& image,
                                       const InferParams& infer);

// ---------------------------------------------------------------------------
// Checkpoints: versioned binary, explicit little-endian layout

void save_checkpoint(const std::filesystem::path& path,
                     const ModelParams& params, const SgdState& sgd);

struct Checkpoint {
  ModelParams params;
  SgdState sgd;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace segarena::model
