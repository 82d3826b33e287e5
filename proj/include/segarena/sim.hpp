#pragma once

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "segarena/config.hpp"
#include "segarena/rng.hpp"
#include "segarena/types.hpp"

namespace segarena::sim {

/// Deterministic 2D top-down stand-in for the robot and arena. A single
/// virtual camera looks straight down; scenes are procedural textures with
/// rigid convex objects on top. Every random draw flows through the state's
/// generator, so any operation sequence replays bit-exactly from a seed.

// ---------------------------------------------------------------------------
// Shapes and object pools

struct ShapeSpec {
  enum class Kind { Disc, Polygon };
  Kind kind = Kind::Disc;
  double radius = 0.0;          // disc only
  std::vector<Vec2> vertices;   // polygon only, centred on its centroid

  double bound_radius() const;
  double area() const;
  /// Inside test in the object frame (even-odd rule for polygons).
  bool contains(const Vec2& local) const;
};

struct ObjectTemplate {
  int id = 0;
  ShapeSpec shape;
};

enum class Split { Train, Val, Test };

/// Fixed parametric shape pools; the three splits are disjoint.
const std::vector<ObjectTemplate>& object_pool(Split split);

// ---------------------------------------------------------------------------
// World state

struct SimObject {
  int id = 0;
  int template_id = 0;
  ShapeSpec shape;
  Vec2 pos = Vec2::Zero();  // shape centroid in arena coordinates
  double angle = 0.0;
  Vec3 color = Vec3::Zero();
  double graspability = 1.0;
};

/// Procedural texture descriptor. family: 0 smooth noise, 1 stripes,
/// 2 checker. Disjoint seed ranges define the train/val/test backgrounds.
struct BackgroundSpec {
  int family = 0;
  std::uint64_t seed = 0;
};

struct ArenaState {
  int width = 0;
  int height = 0;
  BackgroundSpec background;
  double lighting = 1.0;  // global gain
  std::vector<SimObject> objects;
  Rng rng;
};

struct PickPlaceAction {
  Vec2 pick = Vec2::Zero();
  double gripper_angle = 0.0;
  Vec2 place = Vec2::Zero();
};

struct InteractionOutcome {
  std::optional<int> grasped_object;
  std::vector<int> perturbed_objects;
  Image before, mid, after;
};

// ---------------------------------------------------------------------------
// Tuning knobs (see Config registry for documentation and defaults)

struct SimParams {
  int width = 128, height = 128;
  int min_objects = 4, max_objects = 8;
  double spawn_gap = 3.0;
  int max_rejections = 2000;
  double min_object_area = 120.0;
  double lighting_min = 0.9, lighting_max = 1.1;
  double grasp_radius = 10.0, touch_radius = 14.0;
  double nudge_sigma = 2.5, place_sigma = 1.5;
  bool drag_enabled = true;
  double drag_clearance = 3.0, drag_fraction = 0.2, drag_max = 6.0;
  double flicker_prob = 0.05;
  double graspability_min = 0.7, graspability_max = 1.0;
  int reset_sweeps = 8;
  double reset_halfwidth = 10.0, reset_noise = 4.0;
  double push_min = 10.0, push_max = 30.0;
  bool force_grasp = false;  // every attempt on an object succeeds

  static SimParams from_config(const Config& cfg);
  /// Copy with all stochastic disturbances disabled and grasping made exact.
  SimParams noise_free() const;
};

// ---------------------------------------------------------------------------
// Operations

/// Scene with a uniform object count in [min, max], rejection-sampled
/// non-overlapping placements and per-object colours with distinct hues.
/// The evolved generator is stored in the returned state.
ArenaState spawn_scene(const SimParams& params, const BackgroundSpec& background,
                       const std::vector<ObjectTemplate>& pool, Rng rng);

/// Texture colour of one background pixel; pure in (spec, x, y).
Vec3 background_color(const BackgroundSpec& spec, int x, int y);

/// Topmost object id per pixel (-1 where the background shows). Objects are
/// drawn in id order, so later ids occlude earlier ones.
Grid<int> paint_ids(const ArenaState& state);

/// Rasterize the scene: background, then objects in id order, then the
/// lighting gain, quantized to the 8-bit grid.
Image render(const ArenaState& state);

/// Un-occluded footprint of a single object at its current pose.
MaskGrid rasterize_object(const ArenaState& state, const SimObject& obj);

/// Exact per-object visible masks under the same rasterization as render,
/// evaluation-only ground truth. Fully occluded objects are omitted.
std::vector<std::pair<int, MaskGrid>> true_masks(const ArenaState& state);

/// Execute one noisy pick-and-place. Failure modes, in order: pick too far
/// from any centroid (nearby objects only get nudged); grasp failure with
/// probability 1 - graspability*alignment (alignment peaks when the gripper
/// is perpendicular to the object's principal axis); neighbour drag on lift;
/// lighting flicker between captured frames.
InteractionOutcome pick_place(ArenaState& state, const PickPlaceAction& action,
                              const SimParams& params);

/// Decorrelation sweep: boundary points swept to the centre push intersected
/// objects along the sweep with noise.
void reset_sweep(ArenaState& state, const SimParams& params);

struct PassiveStep {
  Image before, after;
  int moved_id = 0;
};

/// Straight-line pushes of one randomly chosen object per step, observed as
/// before/after image pairs. No flicker: the motion is external, the camera
/// holds still.
std::vector<PassiveStep> scripted_passive_motion(ArenaState& state, int steps,
                                                 const SimParams& params);

// ---------------------------------------------------------------------------
// Scene manifests (plain text, exact round trip)

void save_scene(const ArenaState& state, const std::filesystem::path& path);
ArenaState load_scene(const std::filesystem::path& path);

/// Clamp a centre position so a shape of the given bound radius stays fully
/// inside the arena.
Vec2 clamp_inside(const Vec2& pos, double bound_radius, int width, int height);

}  // namespace segarena::sim
