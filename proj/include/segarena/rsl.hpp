#pragma once

#include "segarena/types.hpp"

namespace segarena::rsl {

/// Robust set loss: instead of scoring the prediction against the noisy
/// label mask directly, first infer a latent target that (a) stays within an
/// IoU margin of the noisy mask and (b) is as close to the prediction's own
/// argmax as the constraint allows, then score against that latent target.
///
/// The latent search runs over the common-bias family: all logits inside the
/// noisy mask shifted up and all outside shifted down by one scalar before
/// the per-pixel argmax. Within the family, raising the bias flips the
/// pixels that disagree with the noisy mask in order of increasing logit
/// margin, and each flip can only raise the IoU, so the first feasible bias
/// is found exactly by scanning the sorted margins - no step-size parameter.

struct RslConfig {
  /// Required IoU between the latent target and the noisy mask, in (0, 1].
  /// b = 1 forces the latent to equal the noisy mask and the loss reduces
  /// to plain cross-entropy.
  double b = 0.7;

  /// Slack weight of the soft-constraint formulation. The exact bias search
  /// always reaches IoU 1 at a finite bias, so the constraint is satisfiable
  /// with zero slack and this constant never enters the optimum; it is kept
  /// to document the relationship to the soft form.
  static constexpr double kSlackWeight = 1.0;
};

struct LatentResult {
  MaskGrid latent;
  double bias = 0.0;  // smallest feasible common bias (infimum)
  double iou = 0.0;   // achieved IoU against the noisy mask
};

/// Latent target for logits `q` and noisy mask `m`. Throws on dimension
/// mismatch, empty mask, or b outside (0, 1].
LatentResult infer_latent(const LogitGrid& q, const MaskGrid& m,
                          const RslConfig& cfg);

/// Mean per-pixel binary cross-entropy of `q` against the inferred latent
/// target. Multiply by the pixel count to recover the summed form.
double rsl_loss(const LogitGrid& q, const MaskGrid& m, const RslConfig& cfg);

/// Gradient of rsl_loss with the latent target held fixed (envelope
/// treatment): per pixel (sigmoid(logit) - latent) / pixel_count.
Plane rsl_gradient(const LogitGrid& q, const MaskGrid& m,
                   const RslConfig& cfg);

/// Mean per-pixel binary cross-entropy of `q` against `m` itself.
double cross_entropy(const LogitGrid& q, const MaskGrid& m);

/// Gradient of cross_entropy: per pixel (sigmoid(logit) - m) / pixel_count.
Plane cross_entropy_gradient(const LogitGrid& q, const MaskGrid& m);

/// Numerically stable -log sigmoid(l) if target is 1, -log(1-sigmoid(l)) if 0.
double bce_term(double logit, bool target);

double sigmoid(double logit);

}  // namespace segarena::rsl
