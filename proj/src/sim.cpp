#include "segarena/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "segarena/image_io.hpp"
#include "segarena/mask.hpp"

namespace segarena::sim {
namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double fract(double v) { return v - std::floor(v); }

Vec3 hsv_to_rgb(double h, double s, double v) {
  const double hh = fract(h) * 6.0;
  const int i = static_cast<int>(hh);
  const double f = hh - i;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (i % 6) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

/// Hash of (seed, a, b) mapped to [0, 1).
double hash01(std::uint64_t seed, std::int64_t a, std::int64_t b) {
  const std::uint64_t h =
      Rng::mix(Rng::mix(seed, static_cast<std::uint64_t>(a) * 0x9e3779b1u),
               static_cast<std::uint64_t>(b) * 0x85ebca77u);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

Vec3 muted_color(std::uint64_t seed, int salt) {
  const double h = hash01(seed, salt, 101);
  const double s = 0.45 * hash01(seed, salt, 202);
  const double v = 0.15 + 0.40 * hash01(seed, salt, 303);
  return hsv_to_rgb(h, s, v);
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

std::vector<Vec2> regular_polygon(int n, double circumradius) {
  std::vector<Vec2> verts;
  verts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double a = kTwoPi * i / n;
    verts.emplace_back(circumradius * std::cos(a), circumradius * std::sin(a));
  }
  return verts;
}

std::vector<Vec2> rectangle(double w, double h) {
  return {{-w / 2, -h / 2}, {w / 2, -h / 2}, {w / 2, h / 2}, {-w / 2, h / 2}};
}

ShapeSpec disc(double r) {
  ShapeSpec s;
  s.kind = ShapeSpec::Kind::Disc;
  s.radius = r;
  return s;
}

ShapeSpec polygon(std::vector<Vec2> verts) {
  ShapeSpec s;
  s.kind = ShapeSpec::Kind::Polygon;
  s.vertices = std::move(verts);
  return s;
}

std::vector<ObjectTemplate> make_pool(std::vector<ShapeSpec> shapes, int base_id) {
  std::vector<ObjectTemplate> pool;
  int id = base_id;
  for (ShapeSpec& s : shapes) pool.push_back({id++, std::move(s)});
  return pool;
}

std::string fmt_d(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Image render_excluding(const ArenaState& state, int excluded_id);

}  // namespace

// ---------------------------------------------------------------------------
// Shapes

double ShapeSpec::bound_radius() const {
  if (kind == Kind::Disc) return radius;
  double r = 0.0;
  for (const Vec2& v : vertices) r = std::max(r, v.norm());
  return r;
}

double ShapeSpec::area() const {
  if (kind == Kind::Disc) return M_PI * radius * radius;
  double a = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    a += vertices[j].x() * vertices[i].y() - vertices[i].x() * vertices[j].y();
  }
  return std::abs(a) / 2.0;
}

bool ShapeSpec::contains(const Vec2& p) const {
  if (kind == Kind::Disc) return p.squaredNorm() <= radius * radius;
  bool inside = false;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& vi = vertices[i];
    const Vec2& vj = vertices[j];
    if ((vi.y() > p.y()) != (vj.y() > p.y()) &&
        p.x() < (vj.x() - vi.x()) * (p.y() - vi.y()) / (vj.y() - vi.y()) + vi.x()) {
      inside = !inside;
    }
  }
  return inside;
}

const std::vector<ObjectTemplate>& object_pool(Split split) {
  static const std::vector<ObjectTemplate> train = make_pool(
      {disc(8), disc(10), disc(12), polygon(regular_polygon(4, 10)),
       polygon(regular_polygon(4, 12)), polygon(rectangle(24, 9)),
       polygon(rectangle(20, 8)), polygon(regular_polygon(3, 11)),
       polygon(regular_polygon(3, 12)), polygon(regular_polygon(6, 10))},
      0);
  static const std::vector<ObjectTemplate> val = make_pool(
      {disc(9), polygon(regular_polygon(4, 11)), polygon(rectangle(22, 10)),
       polygon(regular_polygon(5, 9))},
      100);
  static const std::vector<ObjectTemplate> test = make_pool(
      {disc(11), disc(13), polygon(rectangle(18, 12)),
       polygon(regular_polygon(3, 12.5)), polygon(regular_polygon(6, 12)),
       polygon(regular_polygon(7, 9))},
      200);
  switch (split) {
    case Split::Train: return train;
    case Split::Val: return val;
    default: return test;
  }
}

// ---------------------------------------------------------------------------
// Parameters

SimParams SimParams::from_config(const Config& cfg) {
  SimParams p;
  p.width = cfg.get_int("arena.width");
  p.height = cfg.get_int("arena.height");
  p.min_objects = cfg.get_int("arena.min_objects");
  p.max_objects = cfg.get_int("arena.max_objects");
  p.spawn_gap = cfg.get_double("arena.spawn_gap");
  p.max_rejections = cfg.get_int("arena.max_rejections");
  p.min_object_area = cfg.get_double("arena.min_object_area");
  p.lighting_min = cfg.get_double("arena.lighting_min");
  p.lighting_max = cfg.get_double("arena.lighting_max");
  p.grasp_radius = cfg.get_double("sim.grasp_radius");
  p.touch_radius = cfg.get_double("sim.touch_radius");
  p.nudge_sigma = cfg.get_double("sim.nudge_sigma");
  p.place_sigma = cfg.get_double("sim.place_sigma");
  p.drag_enabled = cfg.get_bool("sim.drag_enabled");
  p.drag_clearance = cfg.get_double("sim.drag_clearance");
  p.drag_fraction = cfg.get_double("sim.drag_fraction");
  p.drag_max = cfg.get_double("sim.drag_max");
  p.flicker_prob = cfg.get_double("sim.flicker_prob");
  p.graspability_min = cfg.get_double("sim.graspability_min");
  p.graspability_max = cfg.get_double("sim.graspability_max");
  p.reset_sweeps = cfg.get_int("sim.reset_sweeps");
  p.reset_halfwidth = cfg.get_double("sim.reset_halfwidth");
  p.reset_noise = cfg.get_double("sim.reset_noise");
  p.push_min = cfg.get_double("sim.push_min");
  p.push_max = cfg.get_double("sim.push_max");
  return p;
}

SimParams SimParams::noise_free() const {
  SimParams p = *this;
  p.nudge_sigma = 0.0;
  p.place_sigma = 0.0;
  p.drag_enabled = false;
  p.flicker_prob = 0.0;
  p.force_grasp = true;
  return p;
}

// ---------------------------------------------------------------------------
// Backgrounds

Vec3 background_color(const BackgroundSpec& spec, int x, int y) {
  const Vec3 c0 = muted_color(spec.seed, 1);
  const Vec3 c1 = muted_color(spec.seed, 2);
  switch (spec.family) {
    case 0: {  // smooth value noise on a 16 px lattice
      const int cell = 16;
      const std::int64_t xi = x / cell, yi = y / cell;
      const double fx = smoothstep(static_cast<double>(x % cell) / cell);
      const double fy = smoothstep(static_cast<double>(y % cell) / cell);
      const double v00 = hash01(spec.seed, xi, yi);
      const double v10 = hash01(spec.seed, xi + 1, yi);
      const double v01 = hash01(spec.seed, xi, yi + 1);
      const double v11 = hash01(spec.seed, xi + 1, yi + 1);
      const double t = (v00 * (1 - fx) + v10 * fx) * (1 - fy) +
                       (v01 * (1 - fx) + v11 * fx) * fy;
      return c0 + (c1 - c0) * t;
    }
    case 1: {  // angled stripes
      const double angle = hash01(spec.seed, 7, 7) * M_PI;
      const double period = 10.0 + 14.0 * hash01(spec.seed, 8, 8);
      const double u = x * std::cos(angle) + y * std::sin(angle);
      const auto band = static_cast<std::int64_t>(std::floor(u / period));
      return ((band % 2 + 2) % 2 == 0) ? c0 : c1;
    }
    default: {  // checker
      const int cell = 8 + static_cast<int>(12.0 * hash01(spec.seed, 9, 9));
      return ((x / cell + y / cell) % 2 == 0) ? c0 : c1;
    }
  }
}

// ---------------------------------------------------------------------------
// Rasterization

Grid<int> paint_ids(const ArenaState& state) {
  Grid<int> ids = Grid<int>::Constant(state.height, state.width, -1);
  for (const SimObject& obj : state.objects) {
    const double br = obj.shape.bound_radius();
    const auto x0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(obj.pos.x() - br)));
    const auto y0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(obj.pos.y() - br)));
    const auto x1 = std::min<Eigen::Index>(state.width - 1, static_cast<Eigen::Index>(std::ceil(obj.pos.x() + br)));
    const auto y1 = std::min<Eigen::Index>(state.height - 1, static_cast<Eigen::Index>(std::ceil(obj.pos.y() + br)));
    const double c = std::cos(-obj.angle);
    const double s = std::sin(-obj.angle);
    for (Eigen::Index y = y0; y <= y1; ++y) {
      for (Eigen::Index x = x0; x <= x1; ++x) {
        const double dx = static_cast<double>(x) - obj.pos.x();
        const double dy = static_cast<double>(y) - obj.pos.y();
        const Vec2 local(c * dx - s * dy, s * dx + c * dy);
        if (obj.shape.contains(local)) ids(y, x) = obj.id;
      }
    }
  }
  return ids;
}

namespace {

Image render_excluding(const ArenaState& state, int excluded_id) {
  ArenaState view = state;
  if (excluded_id >= 0) {
    std::erase_if(view.objects,
                  [&](const SimObject& o) { return o.id == excluded_id; });
  }
  const Grid<int> ids = paint_ids(view);
  Image img(state.width, state.height);
  for (int y = 0; y < state.height; ++y) {
    for (int x = 0; x < state.width; ++x) {
      Vec3 col;
      const int id = ids(y, x);
      if (id < 0) {
        col = background_color(state.background, x, y);
      } else {
        const auto it = std::find_if(view.objects.begin(), view.objects.end(),
                                     [&](const SimObject& o) { return o.id == id; });
        col = it->color;
      }
      col *= state.lighting;
      img.r(y, x) = std::min(1.0, std::max(0.0, col.x()));
      img.g(y, x) = std::min(1.0, std::max(0.0, col.y()));
      img.b(y, x) = std::min(1.0, std::max(0.0, col.z()));
    }
  }
  quantize_image(img);
  return img;
}

}  // namespace

Image render(const ArenaState& state) { return render_excluding(state, -1); }

MaskGrid rasterize_object(const ArenaState& state, const SimObject& obj) {
  ArenaState solo = state;
  solo.objects = {obj};
  const Grid<int> ids = paint_ids(solo);
  return (ids == obj.id).eval();
}

std::vector<std::pair<int, MaskGrid>> true_masks(const ArenaState& state) {
  const Grid<int> ids = paint_ids(state);
  std::vector<std::pair<int, MaskGrid>> masks;
  for (const SimObject& obj : state.objects) {
    MaskGrid m = (ids == obj.id).eval();
    if (m.any()) masks.emplace_back(obj.id, std::move(m));
  }
  return masks;
}

// ---------------------------------------------------------------------------
// Scene composition

Vec2 clamp_inside(const Vec2& pos, double bound_radius, int width, int height) {
  const double xlo = bound_radius;
  const double xhi = static_cast<double>(width - 1) - bound_radius;
  const double ylo = bound_radius;
  const double yhi = static_cast<double>(height - 1) - bound_radius;
  return {std::min(std::max(pos.x(), xlo), xhi),
          std::min(std::max(pos.y(), ylo), yhi)};
}

ArenaState spawn_scene(const SimParams& params, const BackgroundSpec& background,
                       const std::vector<ObjectTemplate>& pool, Rng rng) {
  if (pool.empty()) throw std::invalid_argument("spawn_scene: empty object pool");
  for (const ObjectTemplate& t : pool) {
    if (t.shape.area() < params.min_object_area) {
      throw std::invalid_argument("spawn_scene: template below minimum area");
    }
  }

  ArenaState state;
  state.width = params.width;
  state.height = params.height;
  state.background = background;

  const int count = rng.uniform_int(params.min_objects, params.max_objects);
  const double hue_base = rng.uniform();

  for (int i = 0; i < count; ++i) {
    const ObjectTemplate& tmpl =
        pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
    const double br = tmpl.shape.bound_radius();

    Vec2 pos;
    bool placed = false;
    for (int attempt = 0; attempt < params.max_rejections; ++attempt) {
      pos = {rng.uniform(br + 1.0, params.width - 2.0 - br),
             rng.uniform(br + 1.0, params.height - 2.0 - br)};
      bool clear = true;
      for (const SimObject& other : state.objects) {
        const double min_dist =
            br + other.shape.bound_radius() + params.spawn_gap;
        if ((pos - other.pos).norm() < min_dist) {
          clear = false;
          break;
        }
      }
      if (clear) {
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw std::runtime_error("spawn_scene: placement failed after max rejections");
    }

    SimObject obj;
    obj.id = i;
    obj.template_id = tmpl.id;
    obj.shape = tmpl.shape;
    obj.pos = pos;
    obj.angle = rng.uniform(0.0, kTwoPi);
    // Stratified hues keep per-scene object colours distinct.
    const double hue = fract(hue_base + (i + 0.35 + 0.3 * rng.uniform()) / count);
    obj.color = hsv_to_rgb(hue, rng.uniform(0.75, 1.0), rng.uniform(0.8, 1.0));
    obj.graspability = rng.uniform(params.graspability_min, params.graspability_max);
    state.objects.push_back(std::move(obj));
  }

  state.lighting = rng.uniform(params.lighting_min, params.lighting_max);
  state.rng = rng;
  return state;
}

// ---------------------------------------------------------------------------
// Interaction

InteractionOutcome pick_place(ArenaState& state, const PickPlaceAction& action,
                              const SimParams& params) {
  InteractionOutcome out;
  out.before = render(state);

  if (state.rng.uniform() < params.flicker_prob) {
    state.lighting = state.rng.uniform(params.lighting_min, params.lighting_max);
  }

  // Nearest object whose centroid is within reach of the pick point.
  SimObject* candidate = nullptr;
  double best = params.grasp_radius;
  for (SimObject& obj : state.objects) {
    const double d = (obj.pos - action.pick).norm();
    if (d <= best) {
      best = d;
      candidate = &obj;
    }
  }

  int grasped = -1;
  if (candidate != nullptr) {
    const MaskGrid footprint = rasterize_object(state, *candidate);
    const mask::AxisInfo axis = mask::principal_axis_info(footprint);
    // Grasping works best perpendicular to the major axis; round objects
    // grasp equally well at any angle.
    const double alignment =
        axis.eigen_gap < 1e-9
            ? 1.0
            : std::abs(std::sin(action.gripper_angle - axis.angle));
    const double p =
        params.force_grasp ? 1.0 : candidate->graspability * alignment;
    if (state.rng.uniform() < p) {
      grasped = candidate->id;
      out.grasped_object = grasped;
      if (params.drag_enabled) {
        // Lifting disturbs neighbours that overlap the grasped shape's zone.
        const double zone = candidate->shape.bound_radius() + params.drag_clearance;
        for (SimObject& obj : state.objects) {
          if (obj.id == grasped) continue;
          if ((obj.pos - action.pick).norm() <=
              zone + obj.shape.bound_radius()) {
            Vec2 disp = params.drag_fraction * (action.place - action.pick);
            const double len = disp.norm();
            if (len > params.drag_max) disp *= params.drag_max / len;
            disp += Vec2(state.rng.normal(0.0, params.nudge_sigma),
                         state.rng.normal(0.0, params.nudge_sigma));
            obj.pos = clamp_inside(obj.pos + disp, obj.shape.bound_radius(),
                                   state.width, state.height);
            out.perturbed_objects.push_back(obj.id);
          }
        }
      }
    } else {
      // Failed grasp: the gripper still touched whatever was nearby.
      for (SimObject& obj : state.objects) {
        if ((obj.pos - action.pick).norm() <= params.touch_radius) {
          obj.pos = clamp_inside(
              obj.pos + Vec2(state.rng.normal(0.0, params.nudge_sigma),
                             state.rng.normal(0.0, params.nudge_sigma)),
              obj.shape.bound_radius(), state.width, state.height);
          out.perturbed_objects.push_back(obj.id);
        }
      }
    }
  } else {
    for (SimObject& obj : state.objects) {
      if ((obj.pos - action.pick).norm() <= params.touch_radius) {
        obj.pos = clamp_inside(
            obj.pos + Vec2(state.rng.normal(0.0, params.nudge_sigma),
                           state.rng.normal(0.0, params.nudge_sigma)),
            obj.shape.bound_radius(), state.width, state.height);
        out.perturbed_objects.push_back(obj.id);
      }
    }
  }

  out.mid = render_excluding(state, grasped);

  if (state.rng.uniform() < params.flicker_prob) {
    state.lighting = state.rng.uniform(params.lighting_min, params.lighting_max);
  }

  if (grasped >= 0) {
    for (SimObject& obj : state.objects) {
      if (obj.id != grasped) continue;
      const Vec2 noisy =
          action.place + Vec2(state.rng.normal(0.0, params.place_sigma),
                              state.rng.normal(0.0, params.place_sigma));
      obj.pos = clamp_inside(noisy, obj.shape.bound_radius(), state.width,
                             state.height);
    }
  }

  out.after = render(state);
  return out;
}

void reset_sweep(ArenaState& state, const SimParams& params) {
  const Vec2 center(state.width / 2.0, state.height / 2.0);
  const double perimeter = 2.0 * (state.width + state.height);
  for (int k = 0; k < params.reset_sweeps; ++k) {
    // Uniform point on the arena boundary.
    double u = state.rng.uniform() * perimeter;
    Vec2 start;
    if (u < state.width) {
      start = {u, 0.0};
    } else if (u < state.width + state.height) {
      start = {static_cast<double>(state.width - 1), u - state.width};
    } else if (u < 2.0 * state.width + state.height) {
      start = {u - state.width - state.height,
               static_cast<double>(state.height - 1)};
    } else {
      start = {0.0, u - 2.0 * state.width - state.height};
    }

    const Vec2 seg = center - start;
    const double len = seg.norm();
    if (len < 1e-9) continue;
    const Vec2 dir = seg / len;

    for (SimObject& obj : state.objects) {
      const Vec2 v = obj.pos - start;
      const double t = std::min(std::max(v.dot(dir), 0.0), len);
      const Vec2 closest = start + dir * t;
      const Vec2 lateral = obj.pos - closest;
      if (lateral.norm() >
          obj.shape.bound_radius() + params.reset_halfwidth) {
        continue;
      }
      // Pushed ahead of the sweep, dropping off somewhere along the way.
      const double f = state.rng.uniform(std::max(t / len, 0.3), 1.0);
      const Vec2 target = start + dir * (len * f) + lateral * 0.5 +
                          Vec2(state.rng.normal(0.0, params.reset_noise),
                               state.rng.normal(0.0, params.reset_noise));
      obj.pos = clamp_inside(target, obj.shape.bound_radius(), state.width,
                             state.height);
    }
  }
}

std::vector<PassiveStep> scripted_passive_motion(ArenaState& state, int steps,
                                                 const SimParams& params) {
  if (steps < 1) throw std::invalid_argument("scripted_passive_motion: steps < 1");
  if (state.objects.empty()) {
    throw std::invalid_argument("scripted_passive_motion: no objects to move");
  }
  std::vector<PassiveStep> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int s = 0; s < steps; ++s) {
    const int idx =
        state.rng.uniform_int(0, static_cast<int>(state.objects.size()) - 1);
    const double angle = state.rng.uniform(0.0, kTwoPi);
    const double dist = state.rng.uniform(params.push_min, params.push_max);
    PassiveStep step;
    step.before = render(state);
    SimObject& obj = state.objects[static_cast<std::size_t>(idx)];
    obj.pos = clamp_inside(
        obj.pos + dist * Vec2(std::cos(angle), std::sin(angle)),
        obj.shape.bound_radius(), state.width, state.height);
    step.after = render(state);
    step.moved_id = obj.id;
    out.push_back(std::move(step));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scene manifests

void save_scene(const ArenaState& state, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scene " + path.string());
  out << "segarena-scene v1\n";
  out << "size " << state.width << " " << state.height << "\n";
  out << "background " << state.background.family << " "
      << state.background.seed << "\n";
  out << "lighting " << fmt_d(state.lighting) << "\n";
  out << "rng " << state.rng.state() << " " << state.rng.increment() << "\n";
  out << "objects " << state.objects.size() << "\n";
  for (const SimObject& o : state.objects) {
    out << "obj " << o.id << " tmpl " << o.template_id << " ";
    if (o.shape.kind == ShapeSpec::Kind::Disc) {
      out << "disc " << fmt_d(o.shape.radius);
    } else {
      out << "poly " << o.shape.vertices.size();
      for (const Vec2& v : o.shape.vertices) {
        out << " " << fmt_d(v.x()) << " " << fmt_d(v.y());
      }
    }
    out << " pos " << fmt_d(o.pos.x()) << " " << fmt_d(o.pos.y());
    out << " angle " << fmt_d(o.angle);
    out << " color " << fmt_d(o.color.x()) << " " << fmt_d(o.color.y()) << " "
        << fmt_d(o.color.z());
    out << " grasp " << fmt_d(o.graspability) << "\n";
  }
}

namespace {

void expect_token(std::istream& in, const char* want) {
  std::string tok;
  in >> tok;
  if (tok != want) {
    throw std::runtime_error(std::string("scene parse: expected '") + want +
                             "', got '" + tok + "'");
  }
}

}  // namespace

ArenaState load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read scene " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "segarena-scene v1") {
    throw std::runtime_error("not a scene manifest: " + path.string());
  }
  ArenaState state;
  expect_token(in, "size");
  in >> state.width >> state.height;
  expect_token(in, "background");
  in >> state.background.family >> state.background.seed;
  expect_token(in, "lighting");
  in >> state.lighting;
  expect_token(in, "rng");
  std::uint64_t rs = 0, ri = 0;
  in >> rs >> ri;
  state.rng = Rng::from_state(rs, ri);
  expect_token(in, "objects");
  std::size_t count = 0;
  in >> count;
  for (std::size_t i = 0; i < count; ++i) {
    SimObject o;
    expect_token(in, "obj");
    in >> o.id;
    expect_token(in, "tmpl");
    in >> o.template_id;
    std::string kind;
    in >> kind;
    if (kind == "disc") {
      o.shape.kind = ShapeSpec::Kind::Disc;
      in >> o.shape.radius;
    } else if (kind == "poly") {
      o.shape.kind = ShapeSpec::Kind::Polygon;
      std::size_t nv = 0;
      in >> nv;
      o.shape.vertices.resize(nv);
      for (Vec2& v : o.shape.vertices) in >> v.x() >> v.y();
    } else {
      throw std::runtime_error("scene parse: unknown shape kind " + kind);
    }
    expect_token(in, "pos");
    in >> o.pos.x() >> o.pos.y();
    expect_token(in, "angle");
    in >> o.angle;
    expect_token(in, "color");
    in >> o.color.x() >> o.color.y() >> o.color.z();
    expect_token(in, "grasp");
    in >> o.graspability;
    state.objects.push_back(std::move(o));
  }
  if (!in) throw std::runtime_error("scene parse: truncated " + path.string());
  return state;
}

}  // namespace segarena::sim
