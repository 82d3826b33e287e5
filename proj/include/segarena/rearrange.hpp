#pragma once

#include <optional>
#include <vector>

#include "segarena/config.hpp"
#include "segarena/model.hpp"
#include "segarena/sim.hpp"
#include "segarena/types.hpp"

namespace segarena::rearrange {

/// Downstream control task: move objects until the scene matches a target
/// image, using only segmentation plus hand-designed descriptors.

struct SegmentDescriptor {
  Eigen::Matrix<double, 24, 1> histogram;  // 8 bins per channel, sums to 1
  double area_frac = 0.0;
  Vec3 shape_sig = Vec3::Zero();  // (major/area, minor/area, minor/major)
};

/// Descriptor over the masked pixels only; translation invariant.
/// Throws on an empty mask.
SegmentDescriptor describe(const Image& image, const MaskGrid& mask);

double descriptor_distance(const SegmentDescriptor& a,
                           const SegmentDescriptor& b);

/// Minimum-total-cost one-to-one assignment under descriptor L1 distance
/// (Hungarian algorithm, optimal for any list sizes). Returns
/// min(|cur|,|tgt|) pairs of (cur index, tgt index).
std::vector<std::pair<int, int>> match_segments(
    const std::vector<SegmentDescriptor>& cur,
    const std::vector<SegmentDescriptor>& tgt);

/// Min-cost assignment on an explicit cost matrix (rows to columns).
std::vector<std::pair<int, int>> min_cost_assignment(
    const Eigen::MatrixXd& cost);

struct RearrangeParams {
  double tolerance_px = 5.5;  // centre distance counted as "in place"
  int max_interactions = 10;
  model::InferParams infer;
  sim::SimParams sim;

  static RearrangeParams from_config(const Config& cfg);
};

struct EpisodeOutcome {
  bool matched_success = false;  // all matched segment pairs within tolerance
  bool true_success = false;     // all objects within tolerance by id
  int interactions = 0;
  std::vector<std::pair<int, double>> final_displacements;  // by object id
};

/// Segment current and target views, describe and match, then pick-and-place
/// the worst-displaced pair per interaction. Passing no model uses the
/// simulator's true masks as an oracle segmenter.
EpisodeOutcome execute(sim::ArenaState& state,
                       const std::optional<model::ModelParams>& params,
                       const sim::ArenaState& target,
                       const RearrangeParams& cfg);

/// Control arm: uniform random picks and places, no perception.
EpisodeOutcome random_controller(sim::ArenaState& state,
                                 const sim::ArenaState& target,
                                 const RearrangeParams& cfg, Rng& rng);

/// Target configuration: `displaced` objects moved to fresh positions that
/// collide with nothing (neither original nor already chosen targets), so a
/// correct controller can always restore the scene one move at a time.
sim::ArenaState make_target(const sim::ArenaState& scene, int displaced,
                            double min_move, double clearance, Rng& rng);

}  // namespace segarena::rearrange
