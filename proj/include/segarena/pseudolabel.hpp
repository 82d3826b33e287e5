#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "segarena/config.hpp"
#include "segarena/rng.hpp"
#include "segarena/types.hpp"

namespace segarena::pseudo {

/// Pseudo-ground-truth extraction: one interaction's image triple becomes
/// training examples. Motion observed between the pre-pick and mid-lift
/// frames marks the picked thing's footprint; change between mid-lift and
/// post-place marks where it landed.

struct PseudoParams {
  int patch_size = 48;
  double window_frac = 0.6857;   // of the short image side
  double area_frac = 0.006645;   // of the image area
  double diff_threshold = 0.08;
  double fit_frac = 0.5;         // object long side as a fraction of the patch
  double hard_neg_l1_frac = 1.0 / 3.0;  // of the crop side
  int n_augment = 2;
  int n_hard_negatives = 2;

  double window(int img_w, int img_h) const;
  std::int64_t area_threshold(int img_w, int img_h) const;

  static PseudoParams from_config(const Config& cfg);
};

/// One training example. Patch pixels are kept on the 8-bit grid so the
/// in-memory example and its file form are identical, which lets a replayed
/// dataset reproduce training bit-exactly.
struct TrainingExample {
  int patch_size = 0;
  std::vector<std::uint8_t> patch_rgb;   // 3 planes, row-major, patch_size^2 each
  std::vector<std::uint8_t> mask_bits;   // patch_size^2, 0/1; empty plane for negatives
  bool positive = false;
  Vec2 source_pick = Vec2::Zero();
  Vec2 crop_center = Vec2::Zero();  // crop centre in source-image coordinates
  double scale = 1.0;               // patch pixels per source-image pixel
  std::uint64_t source_step = 0;

  Image patch_image() const;
  MaskGrid mask_grid() const;

  static TrainingExample make(const Image& patch, const MaskGrid& mask,
                              bool positive, const Vec2& pick,
                              const Vec2& crop_center, double scale,
                              std::uint64_t step);
};

/// Largest connected changed region inside the window around `focus`,
/// if its area passes the threshold.
std::optional<MaskGrid> extract_pair_mask(const Image& a, const Image& b,
                                          const Vec2& focus,
                                          const PseudoParams& cfg);

/// The labelling mask of one interaction: change between the pre-pick and
/// mid-lift frames, windowed around the pick point.
std::optional<MaskGrid> extract_interaction_mask(const Image& i_before,
                                                 const Image& i_mid,
                                                 const Image& i_after,
                                                 const Vec2& pick,
                                                 const PseudoParams& cfg);

/// Mask present: one positive, cropped around the mask at the scale that
/// fits its long side to fit_frac of the patch. Mask absent: one negative
/// centred at the pick (jittered by up to half the hard-negative threshold
/// when a generator is supplied).
std::vector<TrainingExample> make_examples(const Image& image,
                                           const std::optional<MaskGrid>& mask,
                                           const Vec2& pick,
                                           const PseudoParams& cfg,
                                           Rng* rng = nullptr,
                                           std::uint64_t step = 0);

/// n rescaled copies, factors uniform in [2^-0.25, 2^0.25]; the mask moves
/// under the same transform as the pixels.
std::vector<TrainingExample> augment_positive(const TrainingExample& ex,
                                              Rng& rng, int n);

/// n negatives cropped at offsets more than the L1 jitter threshold away
/// from the positive's centre. The threshold scales with the positive's
/// crop side (cfg.hard_neg_l1_frac of it).
std::vector<TrainingExample> mine_hard_negatives(const TrainingExample& ex,
                                                 const Image& full_image,
                                                 Rng& rng, int n,
                                                 const PseudoParams& cfg);

struct InteractionMasks {
  std::optional<MaskGrid> from_pick;   // (before, mid) around the pick
  std::optional<MaskGrid> from_place;  // (mid, after) around the place
};

/// Full per-interaction example derivation: label example(s), scale
/// augmentation and hard negatives for both motion phases. The same seed
/// and step reproduce the exact example list, so a persisted run replays
/// into an identical dataset.
std::vector<TrainingExample> examples_for_interaction(
    const Image& before, const Image& mid, const Image& after,
    const Vec2& pick, const Vec2& place, const PseudoParams& cfg,
    std::uint64_t run_seed, std::uint64_t step,
    InteractionMasks* out_masks = nullptr);

/// Examples persist as patch PPM + mask PGM + one manifest line.
void save_examples(const std::vector<TrainingExample>& examples,
                   const std::filesystem::path& dir);
std::vector<TrainingExample> load_examples(const std::filesystem::path& dir);

}  // namespace segarena::pseudo
