#include "segarena/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "segarena/mask.hpp"

namespace segarena::rearrange {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Segment {
  MaskGrid mask;
  Vec2 center;
  SegmentDescriptor desc;
};

std::vector<Segment> segment_view(
    const Image& image, const sim::ArenaState* oracle_state,
    const std::optional<model::ModelParams>& params,
    const model::InferParams& infer) {
  std::vector<Segment> segs;
  if (params.has_value()) {
    for (Hypothesis& h : model::infer_segments(*params, image, infer)) {
      if (mask_area(h.mask) < 2) continue;
      Segment s;
      s.center = mask::centroid(h.mask);
      s.desc = describe(image, h.mask);
      s.mask = std::move(h.mask);
      segs.push_back(std::move(s));
    }
  } else {
    for (auto& [id, m] : sim::true_masks(*oracle_state)) {
      if (mask_area(m) < 2) continue;
      Segment s;
      s.center = mask::centroid(m);
      s.desc = describe(image, m);
      s.mask = std::move(m);
      segs.push_back(std::move(s));
    }
  }
  return segs;
}

EpisodeOutcome score_final(const sim::ArenaState& state,
                           const sim::ArenaState& target, double tol,
                           int interactions, bool matched_success) {
  EpisodeOutcome out;
  out.interactions = interactions;
  out.matched_success = matched_success;
  out.true_success = true;
  for (const sim::SimObject& obj : state.objects) {
    const auto it = std::find_if(
        target.objects.begin(), target.objects.end(),
        [&](const sim::SimObject& t) { return t.id == obj.id; });
    if (it == target.objects.end()) continue;
    const double d = (obj.pos - it->pos).norm();
    out.final_displacements.emplace_back(obj.id, d);
    if (d > tol) out.true_success = false;
  }
  return out;
}

}  // namespace

SegmentDescriptor describe(const Image& image, const MaskGrid& mask) {
  if (!mask.any()) throw std::invalid_argument("describe: empty mask");
  SegmentDescriptor d;
  d.histogram.setZero();
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  std::int64_t n = 0;
  for (Eigen::Index y = 0; y < mask.rows(); ++y) {
    for (Eigen::Index x = 0; x < mask.cols(); ++x) {
      if (!mask(y, x)) continue;
      const double vals[3] = {image.r(y, x), image.g(y, x), image.b(y, x)};
      for (int c = 0; c < 3; ++c) {
        const int bin = std::min(7, static_cast<int>(vals[c] * 8.0));
        d.histogram(c * 8 + bin) += 1.0;
      }
      const auto fx = static_cast<double>(x);
      const auto fy = static_cast<double>(y);
      sx += fx;
      sy += fy;
      sxx += fx * fx;
      syy += fy * fy;
      sxy += fx * fy;
      ++n;
    }
  }
  const double fn = static_cast<double>(n);
  d.histogram /= 3.0 * fn;
  d.area_frac = fn / static_cast<double>(mask.rows() * mask.cols());

  const double mx = sx / fn, my = sy / fn;
  const double cxx = sxx / fn - mx * mx;
  const double cyy = syy / fn - my * my;
  const double cxy = sxy / fn - mx * my;
  const double tr = cxx + cyy;
  const double det = std::sqrt(std::max(0.0, (cxx - cyy) * (cxx - cyy) / 4.0 + cxy * cxy));
  const double l1 = tr / 2.0 + det;
  const double l2 = std::max(0.0, tr / 2.0 - det);
  d.shape_sig = {l1 / fn, l2 / fn, l1 > 1e-12 ? l2 / l1 : 1.0};
  return d;
}

double descriptor_distance(const SegmentDescriptor& a,
                           const SegmentDescriptor& b) {
  return (a.histogram - b.histogram).cwiseAbs().sum() +
         std::abs(a.area_frac - b.area_frac) +
         (a.shape_sig - b.shape_sig).cwiseAbs().sum();
}

std::vector<std::pair<int, int>> min_cost_assignment(
    const Eigen::MatrixXd& cost) {
  // Hungarian algorithm with potentials, O(n^3); rows padded to a square
  // matrix with zero-cost dummy rows when needed.
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  if (rows == 0 || cols == 0) return {};
  const int n = std::max(rows, cols);

  const auto c = [&](int r, int col) {
    return (r < rows && col < cols) ? cost(r, col) : 0.0;
  };

  // 1-indexed potentials and matching, as in the classic formulation.
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = c(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::pair<int, int>> pairs;
  for (int j = 1; j <= n; ++j) {
    const int i = p[static_cast<std::size_t>(j)];
    if (i >= 1 && i <= rows && j <= cols) pairs.emplace_back(i - 1, j - 1);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

std::vector<std::pair<int, int>> match_segments(
    const std::vector<SegmentDescriptor>& cur,
    const std::vector<SegmentDescriptor>& tgt) {
  Eigen::MatrixXd cost(cur.size(), tgt.size());
  for (std::size_t i = 0; i < cur.size(); ++i) {
    for (std::size_t j = 0; j < tgt.size(); ++j) {
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          descriptor_distance(cur[i], tgt[j]);
    }
  }
  return min_cost_assignment(cost);
}

RearrangeParams RearrangeParams::from_config(const Config& cfg) {
  RearrangeParams p;
  p.tolerance_px = cfg.get_double("rearrange.tol_frac") * cfg.get_int("arena.width");
  p.max_interactions = cfg.get_int("rearrange.max_interactions");
  p.infer = model::InferParams::from_config(cfg, "eval");
  p.sim = sim::SimParams::from_config(cfg);
  if (cfg.get_bool("rearrange.noise_free")) p.sim = p.sim.noise_free();
  return p;
}

EpisodeOutcome execute(sim::ArenaState& state,
                       const std::optional<model::ModelParams>& params,
                       const sim::ArenaState& target,
                       const RearrangeParams& cfg) {
  const Image target_image = sim::render(target);
  const auto target_segs =
      segment_view(target_image, &target, params, cfg.infer);

  int interactions = 0;
  bool matched_success = false;
  while (true) {
    const Image current_image = sim::render(state);
    const auto cur_segs = segment_view(current_image, &state, params, cfg.infer);

    std::vector<SegmentDescriptor> cur_d, tgt_d;
    cur_d.reserve(cur_segs.size());
    tgt_d.reserve(target_segs.size());
    for (const Segment& s : cur_segs) cur_d.push_back(s.desc);
    for (const Segment& s : target_segs) tgt_d.push_back(s.desc);
    const auto pairs = match_segments(cur_d, tgt_d);

    int worst = -1;
    double worst_d = cfg.tolerance_px;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& [ci, ti] = pairs[k];
      const double d = (cur_segs[static_cast<std::size_t>(ci)].center -
                        target_segs[static_cast<std::size_t>(ti)].center)
                           .norm();
      if (d > worst_d) {
        worst_d = d;
        worst = static_cast<int>(k);
      }
    }
    if (worst < 0) {
      matched_success = !pairs.empty() || target_segs.empty();
      break;
    }
    if (interactions >= cfg.max_interactions) break;

    const auto& [ci, ti] = pairs[static_cast<std::size_t>(worst)];
    const Segment& src = cur_segs[static_cast<std::size_t>(ci)];
    sim::PickPlaceAction action;
    action.pick = src.center;
    action.place = target_segs[static_cast<std::size_t>(ti)].center;
    const auto axis = mask::principal_axis_info(src.mask);
    action.gripper_angle = std::fmod(axis.angle + M_PI / 2.0, M_PI);
    sim::pick_place(state, action, cfg.sim);
    ++interactions;
  }
  return score_final(state, target, cfg.tolerance_px, interactions,
                     matched_success);
}

EpisodeOutcome random_controller(sim::ArenaState& state,
                                 const sim::ArenaState& target,
                                 const RearrangeParams& cfg, Rng& rng) {
  for (int i = 0; i < cfg.max_interactions; ++i) {
    sim::PickPlaceAction action;
    action.pick = {rng.uniform(0.0, state.width - 1.0),
                   rng.uniform(0.0, state.height - 1.0)};
    action.place = {rng.uniform(0.0, state.width - 1.0),
                    rng.uniform(0.0, state.height - 1.0)};
    action.gripper_angle = rng.uniform(0.0, M_PI);
    sim::pick_place(state, action, cfg.sim);
  }
  return score_final(state, target, cfg.tolerance_px, cfg.max_interactions,
                     false);
}

sim::ArenaState make_target(const sim::ArenaState& scene, int displaced,
                            double min_move, double clearance, Rng& rng) {
  sim::ArenaState target = scene;
  const int n = static_cast<int>(target.objects.size());
  displaced = std::min(displaced, n);

  // Choose which objects move (partial Fisher-Yates).
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < displaced; ++i) {
    const int j = rng.uniform_int(i, n - 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }

  for (int k = 0; k < displaced; ++k) {
    sim::SimObject& obj = target.objects[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
    const double br = obj.shape.bound_radius();
    for (int attempt = 0; attempt < 4000; ++attempt) {
      const Vec2 cand(rng.uniform(br + 1.0, scene.width - 2.0 - br),
                      rng.uniform(br + 1.0, scene.height - 2.0 - br));
      if ((cand - obj.pos).norm() < min_move) continue;
      bool clear = true;
      // Keep clear of every original position and every target so one
      // object can always be moved without collisions.
      for (const sim::SimObject& other : scene.objects) {
        if (other.id != obj.id &&
            (cand - other.pos).norm() <
                br + other.shape.bound_radius() + clearance) {
          clear = false;
          break;
        }
      }
      for (const sim::SimObject& other : target.objects) {
        if (other.id != obj.id &&
            (cand - other.pos).norm() <
                br + other.shape.bound_radius() + clearance) {
          clear = false;
          break;
        }
      }
      if (clear) {
        obj.pos = cand;
        break;
      }
    }
  }
  return target;
}

}  // namespace segarena::rearrange
