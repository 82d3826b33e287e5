#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "segarena/mask.hpp"
#include "segarena/sim.hpp"

using namespace segarena;
using namespace segarena::sim;

namespace {

SimParams quiet_params() {
  SimParams p;  // defaults
  p.flicker_prob = 0.0;
  return p;
}

ShapeSpec disc_shape(double r) {
  ShapeSpec s;
  s.kind = ShapeSpec::Kind::Disc;
  s.radius = r;
  return s;
}

SimObject make_disc(int id, double r, const Vec2& pos, const Vec3& color) {
  SimObject o;
  o.id = id;
  o.template_id = -1;
  o.shape = disc_shape(r);
  o.pos = pos;
  o.color = color;
  o.graspability = 1.0;
  return o;
}

ArenaState bare_state(int w, int h) {
  ArenaState s;
  s.width = w;
  s.height = h;
  s.background = {0, 7};
  s.lighting = 1.0;
  s.rng = Rng(999, 5);
  return s;
}

std::string scene_string(const ArenaState& s) {
  const auto path = std::filesystem::temp_directory_path() / "segarena_scene_tmp.scene";
  save_scene(s, path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::filesystem::remove(path);
  return ss.str();
}

}  // namespace

TEST_CASE("shape areas and containment") {
  const ShapeSpec d = disc_shape(5);
  CHECK(d.area() == doctest::Approx(M_PI * 25));
  CHECK(d.contains({3, 3}));
  CHECK_FALSE(d.contains({4, 4}));

  ShapeSpec sq;
  sq.kind = ShapeSpec::Kind::Polygon;
  sq.vertices = {{-2, -2}, {2, -2}, {2, 2}, {-2, 2}};
  CHECK(sq.area() == doctest::Approx(16.0));
  CHECK(sq.contains({0, 0}));
  CHECK(sq.contains({-1.5, 1.5}));
  CHECK_FALSE(sq.contains({3, 0}));
  CHECK(sq.bound_radius() == doctest::Approx(std::sqrt(8.0)));
}

TEST_CASE("object pools are disjoint and big enough") {
  const auto& train = object_pool(Split::Train);
  const auto& val = object_pool(Split::Val);
  const auto& test = object_pool(Split::Test);
  CHECK(train.size() >= 8);
  CHECK(val.size() >= 3);
  CHECK(test.size() >= 5);
  for (const auto& pool : {train, val, test}) {
    for (const auto& t : pool) CHECK(t.shape.area() >= 120.0);
  }
  for (const auto& a : train) {
    for (const auto& b : test) CHECK(a.id != b.id);
  }
}

TEST_CASE("spawn: forced count with a single template") {
  SimParams p = quiet_params();
  p.min_objects = 4;
  p.max_objects = 4;
  const std::vector<ObjectTemplate> pool = {object_pool(Split::Train)[0]};
  const ArenaState s = spawn_scene(p, {0, 3}, pool, Rng(11, 1));
  REQUIRE(s.objects.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      const double d = (s.objects[i].pos - s.objects[j].pos).norm();
      CHECK(d >= s.objects[i].shape.bound_radius() +
                    s.objects[j].shape.bound_radius());
    }
  }
}

TEST_CASE("spawn determinism") {
  const SimParams p = quiet_params();
  const auto& pool = object_pool(Split::Train);
  const ArenaState a = spawn_scene(p, {1, 42}, pool, Rng(77, 2));
  const ArenaState b = spawn_scene(p, {1, 42}, pool, Rng(77, 2));
  CHECK(scene_string(a) == scene_string(b));
}

TEST_CASE("spawn count distribution is uniform on [4,8]") {
  const SimParams p = quiet_params();
  const auto& pool = object_pool(Split::Train);
  int counts[5] = {0, 0, 0, 0, 0};
  const int n = 3000;
  Rng rng(1234, 9);
  for (int i = 0; i < n; ++i) {
    Rng spawn_rng(rng.next_u64(), 3);
    const ArenaState s = spawn_scene(p, {0, 1}, pool, spawn_rng);
    const auto c = s.objects.size();
    REQUIRE(c >= 4);
    REQUIRE(c <= 8);
    counts[c - 4]++;
  }
  const double expect = n / 5.0;
  const double sigma = std::sqrt(n * 0.2 * 0.8);
  for (const int c : counts) {
    CHECK(std::abs(c - expect) < 3.0 * sigma);
  }
}

TEST_CASE("spawn failure when nothing fits") {
  SimParams p = quiet_params();
  p.width = 48;
  p.height = 48;
  p.min_objects = 8;
  p.max_objects = 8;
  p.max_rejections = 50;
  const std::vector<ObjectTemplate> pool = {object_pool(Split::Test)[1]};  // disc 13
  CHECK_THROWS(spawn_scene(p, {0, 3}, pool, Rng(5, 1)));
}

TEST_CASE("render: background only, determinism, and colour dominance") {
  ArenaState s = bare_state(64, 64);
  const Image bg = render(s);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      const Vec3 c = background_color(s.background, x, y) * s.lighting;
      CHECK(bg.r(y, x) == doctest::Approx(std::round(c.x() * 255) / 255.0).epsilon(1e-9));
    }
  }

  s.objects.push_back(make_disc(0, 8, {32, 32}, {1.0, 0.05, 0.05}));
  const Image a = render(s);
  const Image b = render(s);
  CHECK(a == b);
  CHECK(a.r(32, 32) > 0.8);
  CHECK(a.r(32, 32) > 3 * a.g(32, 32));
}

TEST_CASE("true masks: area, disjointness, render consistency") {
  ArenaState s = bare_state(96, 96);
  s.objects.push_back(make_disc(0, 10, {30, 30}, {0.9, 0.2, 0.1}));
  s.objects.push_back(make_disc(1, 8, {70, 60}, {0.1, 0.9, 0.2}));

  const auto masks = true_masks(s);
  REQUIRE(masks.size() == 2);
  CHECK(std::abs(static_cast<double>(mask_area(masks[0].second)) - M_PI * 100) <= 10.0);
  CHECK_FALSE((masks[0].second && masks[1].second).any());

  // union of true masks equals the changed pixels vs a background-only render
  ArenaState empty = s;
  empty.objects.clear();
  const Image with = render(s);
  const Image without = render(empty);
  MaskGrid uni = masks[0].second || masks[1].second;
  MaskGrid changed(96, 96);
  for (int y = 0; y < 96; ++y) {
    for (int x = 0; x < 96; ++x) {
      changed(y, x) = with.r(y, x) != without.r(y, x) ||
                      with.g(y, x) != without.g(y, x) ||
                      with.b(y, x) != without.b(y, x);
    }
  }
  CHECK((changed == uni).all());

  // recolouring one object only changes pixels inside its true mask
  ArenaState recolored = s;
  recolored.objects[0].color = {0.2, 0.2, 1.0};
  const Image after = render(recolored);
  for (int y = 0; y < 96; ++y) {
    for (int x = 0; x < 96; ++x) {
      if (!masks[0].second(y, x)) {
        CHECK(after.r(y, x) == with.r(y, x));
        CHECK(after.g(y, x) == with.g(y, x));
        CHECK(after.b(y, x) == with.b(y, x));
      }
    }
  }
}

TEST_CASE("occlusion: later ids draw on top") {
  ArenaState s = bare_state(64, 64);
  s.objects.push_back(make_disc(0, 10, {32, 32}, {1, 0, 0}));
  s.objects.push_back(make_disc(1, 6, {32, 32}, {0, 1, 0}));
  const auto masks = true_masks(s);
  REQUIRE(masks.size() == 2);
  CHECK(masks[0].first == 0);
  // the smaller disc is fully visible; the larger one lost its centre
  CHECK(std::abs(static_cast<double>(mask_area(masks[1].second)) - M_PI * 36) <= 8.0);
  CHECK_FALSE(masks[0].second(32, 32));
  CHECK(masks[1].second(32, 32));
}

TEST_CASE("pick_place: miss far from objects leaves the scene bit-identical") {
  SimParams p = quiet_params();
  ArenaState s = bare_state(96, 96);
  s.objects.push_back(make_disc(0, 8, {20, 20}, {0.9, 0.3, 0.2}));
  PickPlaceAction action;
  action.pick = {80, 80};
  action.place = {40, 40};
  action.gripper_angle = 0.3;
  const auto out = pick_place(s, action, p);
  CHECK_FALSE(out.grasped_object.has_value());
  CHECK(out.perturbed_objects.empty());
  CHECK(out.before == out.after);
  CHECK(out.before == out.mid);
  CHECK(s.objects[0].pos.x() == doctest::Approx(20.0));
}

TEST_CASE("pick_place: certain grasp teleports the object to the place point") {
  SimParams p = quiet_params();
  p.place_sigma = 0.0;
  ArenaState s = bare_state(96, 96);
  s.objects.push_back(make_disc(0, 8, {20, 20}, {0.9, 0.3, 0.2}));  // isotropic
  PickPlaceAction action;
  action.pick = {20, 20};
  action.place = {70, 60};
  action.gripper_angle = 1.234;  // any angle grips a disc
  const auto out = pick_place(s, action, p);
  REQUIRE(out.grasped_object.has_value());
  CHECK(*out.grasped_object == 0);
  CHECK(s.objects[0].pos.x() == doctest::Approx(70.0));
  CHECK(s.objects[0].pos.y() == doctest::Approx(60.0));
  REQUIRE(out.grasped_object.has_value());
  CHECK_FALSE(out.mid == out.before);  // old footprint vanished mid-lift
}

TEST_CASE("pick_place: elongated object needs a perpendicular gripper") {
  SimParams p = quiet_params();
  p.place_sigma = 0.0;
  ShapeSpec bar;
  bar.kind = ShapeSpec::Kind::Polygon;
  bar.vertices = {{-12, -3}, {12, -3}, {12, 3}, {-12, 3}};

  // axis of the horizontal bar is 0; perpendicular gripper angle pi/2
  for (int trial = 0; trial < 5; ++trial) {
    ArenaState s = bare_state(96, 96);
    SimObject o;
    o.id = 0;
    o.shape = bar;
    o.pos = {48, 48};
    o.color = {0.9, 0.8, 0.1};
    o.graspability = 1.0;
    s.objects.push_back(o);
    s.rng = Rng(100 + trial, 3);
    PickPlaceAction action;
    action.pick = {48, 48};
    action.place = {20, 20};
    action.gripper_angle = M_PI / 2;
    const auto out = pick_place(s, action, p);
    CHECK(out.grasped_object.has_value());  // p = 1: |sin(pi/2)| = 1
  }

  // parallel gripper never grasps (alignment 0) but perturbs by contact
  ArenaState s = bare_state(96, 96);
  SimObject o;
  o.id = 0;
  o.shape = bar;
  o.pos = {48, 48};
  o.color = {0.9, 0.8, 0.1};
  o.graspability = 1.0;
  s.objects.push_back(o);
  PickPlaceAction action;
  action.pick = {48, 48};
  action.place = {20, 20};
  action.gripper_angle = 0.0;
  const auto out = pick_place(s, action, p);
  CHECK_FALSE(out.grasped_object.has_value());
  REQUIRE(out.perturbed_objects.size() == 1);
}

TEST_CASE("pick_place: lifting drags a close neighbour") {
  SimParams p = quiet_params();
  p.place_sigma = 0.0;
  ArenaState s = bare_state(128, 128);
  // discs of radius 8 whose rims are 1 px apart
  s.objects.push_back(make_disc(0, 8, {60, 60}, {0.9, 0.2, 0.2}));
  s.objects.push_back(make_disc(1, 8, {77, 60}, {0.2, 0.9, 0.2}));
  PickPlaceAction action;
  action.pick = {60, 60};
  action.place = {100, 100};
  action.gripper_angle = 0.0;
  const auto out = pick_place(s, action, p);
  REQUIRE(out.grasped_object.has_value());
  REQUIRE(out.perturbed_objects.size() == 1);
  CHECK(out.perturbed_objects[0] == 1);
  CHECK((s.objects[1].pos - Vec2(77, 60)).norm() > 0.5);

  // with drag disabled the neighbour stays put
  ArenaState s2 = bare_state(128, 128);
  s2.objects.push_back(make_disc(0, 8, {60, 60}, {0.9, 0.2, 0.2}));
  s2.objects.push_back(make_disc(1, 8, {77, 60}, {0.2, 0.9, 0.2}));
  SimParams p2 = p;
  p2.drag_enabled = false;
  const auto out2 = pick_place(s2, action, p2);
  REQUIRE(out2.grasped_object.has_value());
  CHECK(s2.objects[1].pos.x() == doctest::Approx(77.0));
}

TEST_CASE("pick_place conserves object count") {
  const SimParams p = quiet_params();
  ArenaState s = spawn_scene(p, {2, 9}, object_pool(Split::Train), Rng(31, 4));
  const auto n = s.objects.size();
  for (int i = 0; i < 12; ++i) {
    PickPlaceAction action;
    action.pick = {s.rng.uniform(0, 127), s.rng.uniform(0, 127)};
    action.place = {s.rng.uniform(0, 127), s.rng.uniform(0, 127)};
    action.gripper_angle = s.rng.uniform(0, M_PI);
    pick_place(s, action, p);
    CHECK(s.objects.size() == n);
  }
}

TEST_CASE("flicker resamples the lighting gain") {
  SimParams p = quiet_params();
  p.flicker_prob = 1.0;
  ArenaState s = bare_state(64, 64);
  s.objects.push_back(make_disc(0, 8, {20, 20}, {0.9, 0.3, 0.2}));
  const double before_gain = s.lighting;
  PickPlaceAction action;
  action.pick = {50, 50};
  action.place = {40, 40};
  pick_place(s, action, p);
  CHECK(s.lighting != before_gain);
}

TEST_CASE("reset sweep") {
  const SimParams p = quiet_params();

  SUBCASE("no objects: only the generator advances") {
    ArenaState s = bare_state(64, 64);
    const auto state_before = s.rng.state();
    reset_sweep(s, p);
    CHECK(s.objects.empty());
    CHECK(s.rng.state() != state_before);
  }

  SUBCASE("object at the centre stays near the centre") {
    ArenaState s = bare_state(128, 128);
    s.objects.push_back(make_disc(0, 8, {64, 64}, {0.9, 0.2, 0.2}));
    reset_sweep(s, p);
    CHECK((s.objects[0].pos - Vec2(64, 64)).norm() < 30.0);
  }

  SUBCASE("determinism") {
    ArenaState a = spawn_scene(p, {1, 13}, object_pool(Split::Train), Rng(55, 6));
    ArenaState b = spawn_scene(p, {1, 13}, object_pool(Split::Train), Rng(55, 6));
    reset_sweep(a, p);
    reset_sweep(b, p);
    CHECK(scene_string(a) == scene_string(b));
  }
}

TEST_CASE("scripted passive motion") {
  const SimParams p = quiet_params();

  SUBCASE("exactly one object moves per step") {
    ArenaState s = spawn_scene(p, {0, 17}, object_pool(Split::Train), Rng(66, 7));
    const ArenaState before = s;
    const auto steps = scripted_passive_motion(s, 1, p);
    REQUIRE(steps.size() == 1);
    int moved = 0;
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      if ((s.objects[i].pos - before.objects[i].pos).norm() > 1e-12) {
        ++moved;
        CHECK(s.objects[i].id == steps[0].moved_id);
      }
    }
    CHECK(moved == 1);
  }

  SUBCASE("difference is confined to the moved object's footprints") {
    ArenaState s = bare_state(96, 96);
    s.objects.push_back(make_disc(0, 9, {30, 30}, {0.9, 0.2, 0.2}));
    s.objects.push_back(make_disc(1, 8, {70, 70}, {0.2, 0.9, 0.2}));
    const ArenaState before_state = s;
    const auto steps = scripted_passive_motion(s, 1, p);
    REQUIRE(steps.size() == 1);
    const auto& moved_before = *std::find_if(
        before_state.objects.begin(), before_state.objects.end(),
        [&](const SimObject& o) { return o.id == steps[0].moved_id; });
    const auto& moved_after = *std::find_if(
        s.objects.begin(), s.objects.end(),
        [&](const SimObject& o) { return o.id == steps[0].moved_id; });
    const MaskGrid footprint = rasterize_object(before_state, moved_before) ||
                               rasterize_object(s, moved_after);
    for (int y = 0; y < 96; ++y) {
      for (int x = 0; x < 96; ++x) {
        const bool diff = steps[0].before.r(y, x) != steps[0].after.r(y, x) ||
                          steps[0].before.g(y, x) != steps[0].after.g(y, x) ||
                          steps[0].before.b(y, x) != steps[0].after.b(y, x);
        if (diff) CHECK(footprint(y, x));
      }
    }
  }

  SUBCASE("same seed, same trajectory") {
    ArenaState a = spawn_scene(p, {2, 23}, object_pool(Split::Train), Rng(88, 8));
    ArenaState b = spawn_scene(p, {2, 23}, object_pool(Split::Train), Rng(88, 8));
    const auto sa = scripted_passive_motion(a, 3, p);
    const auto sb = scripted_passive_motion(b, 3, p);
    for (int i = 0; i < 3; ++i) {
      CHECK(sa[i].moved_id == sb[i].moved_id);
      CHECK(sa[i].after == sb[i].after);
    }
  }

  SUBCASE("pre-conditions") {
    ArenaState s = bare_state(64, 64);
    CHECK_THROWS(scripted_passive_motion(s, 1, p));  // no objects
    s.objects.push_back(make_disc(0, 8, {20, 20}, {0.9, 0.3, 0.2}));
    CHECK_THROWS(scripted_passive_motion(s, 0, p));  // steps < 1
  }
}

TEST_CASE("full operation sequence replays bit-identically") {
  const SimParams p = quiet_params();
  const auto run_once = [&] {
    ArenaState s = spawn_scene(p, {1, 31}, object_pool(Split::Train), Rng(123, 9));
    std::vector<Image> frames;
    for (int i = 0; i < 3; ++i) {
      PickPlaceAction action;
      action.pick = {s.rng.uniform(0, 127), s.rng.uniform(0, 127)};
      action.place = {s.rng.uniform(0, 127), s.rng.uniform(0, 127)};
      action.gripper_angle = s.rng.uniform(0, M_PI);
      const auto out = pick_place(s, action, p);
      frames.push_back(out.after);
    }
    reset_sweep(s, p);
    frames.push_back(render(s));
    return std::make_pair(scene_string(s), frames);
  };
  const auto [sa, fa] = run_once();
  const auto [sb, fb] = run_once();
  CHECK(sa == sb);
  REQUIRE(fa.size() == fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) CHECK(fa[i] == fb[i]);
}

TEST_CASE("scene manifest round trip") {
  const SimParams p = quiet_params();
  ArenaState s = spawn_scene(p, {2, 57}, object_pool(Split::Test), Rng(456, 11));
  reset_sweep(s, p);  // so lighting/rng are not fresh
  const auto path = std::filesystem::temp_directory_path() / "segarena_roundtrip.scene";
  save_scene(s, path);
  const ArenaState back = load_scene(path);
  CHECK(scene_string(back) == scene_string(s));
  CHECK(render(back) == render(s));
  CHECK(back.rng == s.rng);
  std::filesystem::remove(path);
}
