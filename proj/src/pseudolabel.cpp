#include "segarena/pseudolabel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "segarena/image_io.hpp"
#include "segarena/mask.hpp"
#include "segarena/resample.hpp"

namespace segarena::pseudo {
namespace {

constexpr double kScaleLo = 0.8408964152537145;  // 2^-0.25
constexpr double kScaleHi = 1.189207115002721;   // 2^0.25

struct Bbox {
  Eigen::Index x0, y0, x1, y1;  // inclusive
  Vec2 center() const {
    return {static_cast<double>(x0 + x1) / 2.0,
            static_cast<double>(y0 + y1) / 2.0};
  }
  double long_side() const {
    return static_cast<double>(std::max(x1 - x0, y1 - y0) + 1);
  }
};

Bbox bounding_box(const MaskGrid& m) {
  Bbox b{m.cols(), m.rows(), -1, -1};
  for (Eigen::Index y = 0; y < m.rows(); ++y) {
    for (Eigen::Index x = 0; x < m.cols(); ++x) {
      if (!m(y, x)) continue;
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x);
      b.y1 = std::max(b.y1, y);
    }
  }
  return b;
}

std::string fmt_d(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double PseudoParams::window(int img_w, int img_h) const {
  return window_frac * std::min(img_w, img_h);
}

std::int64_t PseudoParams::area_threshold(int img_w, int img_h) const {
  return std::llround(area_frac * img_w * img_h);
}

PseudoParams PseudoParams::from_config(const Config& cfg) {
  PseudoParams p;
  p.patch_size = cfg.get_int("model.patch");
  p.window_frac = cfg.get_double("pseudo.window_frac");
  p.area_frac = cfg.get_double("pseudo.area_frac");
  p.diff_threshold = cfg.get_double("pseudo.diff_threshold");
  p.fit_frac = cfg.get_double("pseudo.fit_frac");
  p.hard_neg_l1_frac = cfg.get_double("pseudo.hard_neg_l1_frac");
  p.n_augment = cfg.get_int("pseudo.n_augment");
  p.n_hard_negatives = cfg.get_int("pseudo.n_hard_negatives");
  return p;
}

Image TrainingExample::patch_image() const {
  Image img(patch_size, patch_size);
  const std::size_t plane = static_cast<std::size_t>(patch_size) * patch_size;
  for (int c = 0; c < 3; ++c) {
    Plane& dst = img.channel(c);
    for (std::size_t i = 0; i < plane; ++i) {
      dst.data()[static_cast<Eigen::Index>(i)] =
          from_byte(patch_rgb[c * plane + i]);
    }
  }
  return img;
}

MaskGrid TrainingExample::mask_grid() const {
  MaskGrid m = MaskGrid::Constant(patch_size, patch_size, false);
  if (mask_bits.empty()) return m;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = mask_bits[static_cast<std::size_t>(i)] != 0;
  }
  return m;
}

TrainingExample TrainingExample::make(const Image& patch, const MaskGrid& mask,
                                      bool positive, const Vec2& pick,
                                      const Vec2& crop_center, double scale,
                                      std::uint64_t step) {
  TrainingExample ex;
  ex.patch_size = patch.width();
  const std::size_t plane = static_cast<std::size_t>(ex.patch_size) * ex.patch_size;
  ex.patch_rgb.resize(3 * plane);
  for (int c = 0; c < 3; ++c) {
    const Plane& src = patch.channel(c);
    for (std::size_t i = 0; i < plane; ++i) {
      ex.patch_rgb[c * plane + i] = to_byte(src.data()[static_cast<Eigen::Index>(i)]);
    }
  }
  if (positive) {
    ex.mask_bits.resize(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      ex.mask_bits[i] = mask.data()[static_cast<Eigen::Index>(i)] ? 1 : 0;
    }
  }
  ex.positive = positive;
  ex.source_pick = pick;
  ex.crop_center = crop_center;
  ex.scale = scale;
  ex.source_step = step;
  return ex;
}

std::optional<MaskGrid> extract_pair_mask(const Image& a, const Image& b,
                                          const Vec2& focus,
                                          const PseudoParams& cfg) {
  if (!a.same_dims(b)) {
    throw std::invalid_argument("extract_pair_mask: dimension mismatch");
  }
  const MaskGrid diff = mask::difference_mask(
      a, b, focus, cfg.window(a.width(), a.height()), cfg.diff_threshold);
  if (!diff.any()) return std::nullopt;
  auto comps = mask::connected_components(diff, mask::Connectivity::Eight);
  MaskGrid& largest = comps.front();
  if (mask_area(largest) < cfg.area_threshold(a.width(), a.height())) {
    return std::nullopt;
  }
  return std::move(largest);
}

std::optional<MaskGrid> extract_interaction_mask(const Image& i_before,
                                                 const Image& i_mid,
                                                 const Image& i_after,
                                                 const Vec2& pick,
                                                 const PseudoParams& cfg) {
  if (!i_before.same_dims(i_mid) || !i_mid.same_dims(i_after)) {
    throw std::invalid_argument("extract_interaction_mask: dimension mismatch");
  }
  return extract_pair_mask(i_before, i_mid, pick, cfg);
}

std::vector<TrainingExample> make_examples(const Image& image,
                                           const std::optional<MaskGrid>& mask,
                                           const Vec2& pick,
                                           const PseudoParams& cfg,
                                           Rng* rng, std::uint64_t step) {
  std::vector<TrainingExample> out;
  if (mask.has_value()) {
    const Bbox box = bounding_box(*mask);
    const double crop = std::max(cfg.patch_size * 0.25, box.long_side() / cfg.fit_frac);
    const Vec2 center = box.center();
    const Image patch = crop_resample(image, center, crop, cfg.patch_size);
    const MaskGrid patch_mask =
        crop_resample_mask(*mask, center, crop, cfg.patch_size);
    out.push_back(TrainingExample::make(patch, patch_mask, true, pick, center,
                                        cfg.patch_size / crop, step));
  } else {
    Vec2 center = pick;
    if (rng != nullptr) {
      const double j = cfg.hard_neg_l1_frac * cfg.patch_size / 2.0;
      center += Vec2(rng->uniform(-j, j), rng->uniform(-j, j));
    }
    const Image patch = crop_resample(image, center, cfg.patch_size, cfg.patch_size);
    out.push_back(
        TrainingExample::make(patch, MaskGrid(), false, pick, center, 1.0, step));
  }
  return out;
}

std::vector<TrainingExample> augment_positive(const TrainingExample& ex,
                                              Rng& rng, int n) {
  if (!ex.positive) {
    throw std::invalid_argument("augment_positive: example is negative");
  }
  std::vector<TrainingExample> out;
  out.reserve(static_cast<std::size_t>(std::max(0, n)));
  const Image patch = ex.patch_image();
  const MaskGrid mask = ex.mask_grid();
  for (int i = 0; i < n; ++i) {
    const double f = rng.uniform(kScaleLo, kScaleHi);
    const Image scaled = rescale_about_center(patch, f);
    const MaskGrid scaled_mask = rescale_about_center_mask(mask, f);
    if (!scaled_mask.any()) continue;  // zoomed the object out of frame
    out.push_back(TrainingExample::make(scaled, scaled_mask, true,
                                        ex.source_pick, ex.crop_center,
                                        ex.scale * f, ex.source_step));
  }
  return out;
}

std::vector<TrainingExample> mine_hard_negatives(const TrainingExample& ex,
                                                 const Image& full_image,
                                                 Rng& rng, int n,
                                                 const PseudoParams& cfg) {
  if (!ex.positive) {
    throw std::invalid_argument("mine_hard_negatives: example is negative");
  }
  const double crop = ex.patch_size / ex.scale;
  const double threshold = cfg.hard_neg_l1_frac * crop;
  std::vector<TrainingExample> out;
  out.reserve(static_cast<std::size_t>(std::max(0, n)));
  for (int i = 0; i < n; ++i) {
    Vec2 offset(2.0 * threshold, 2.0 * threshold);  // fallback, always valid
    for (int attempt = 0; attempt < 64; ++attempt) {
      const Vec2 cand(rng.uniform(-2.0 * threshold, 2.0 * threshold),
                      rng.uniform(-2.0 * threshold, 2.0 * threshold));
      if (std::abs(cand.x()) + std::abs(cand.y()) > threshold) {
        offset = cand;
        break;
      }
    }
    const Vec2 center = ex.crop_center + offset;
    const Image patch = crop_resample(full_image, center, crop, ex.patch_size);
    out.push_back(TrainingExample::make(patch, MaskGrid(), false, center,
                                        center, ex.scale, ex.source_step));
  }
  return out;
}

std::vector<TrainingExample> examples_for_interaction(
    const Image& before, const Image& mid, const Image& after,
    const Vec2& pick, const Vec2& place, const PseudoParams& cfg,
    std::uint64_t run_seed, std::uint64_t step, InteractionMasks* out_masks) {
  Rng rng(Rng::mix(run_seed, step), 11);
  std::vector<TrainingExample> out;

  const auto expand = [&](const std::optional<MaskGrid>& m, const Image& base,
                          const Vec2& focus, bool emit_negative) {
    auto exs = make_examples(base, m, focus, cfg, &rng, step);
    if (m.has_value()) {
      const TrainingExample& pos = exs.front();
      auto aug = augment_positive(pos, rng, cfg.n_augment);
      auto hard = mine_hard_negatives(pos, base, rng, cfg.n_hard_negatives, cfg);
      out.push_back(pos);
      out.insert(out.end(), aug.begin(), aug.end());
      out.insert(out.end(), hard.begin(), hard.end());
    } else if (emit_negative) {
      out.push_back(exs.front());
    }
  };

  const auto mask_pick = extract_pair_mask(before, mid, pick, cfg);
  const auto mask_place = extract_pair_mask(mid, after, place, cfg);
  expand(mask_pick, before, pick, /*emit_negative=*/true);
  expand(mask_place, after, place, /*emit_negative=*/false);

  if (out_masks != nullptr) {
    out_masks->from_pick = mask_pick;
    out_masks->from_place = mask_place;
  }
  return out;
}

void save_examples(const std::vector<TrainingExample>& examples,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "examples.manifest");
  if (!manifest) {
    throw std::runtime_error("cannot write examples manifest in " + dir.string());
  }
  manifest << "segarena-examples v1\n";
  char name[64];
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const TrainingExample& ex = examples[i];
    std::snprintf(name, sizeof(name), "%06zu", i);
    const std::string patch_file = std::string(name) + "_patch.ppm";
    write_image_ppm(ex.patch_image(), dir / patch_file);
    std::string mask_file = "-";
    if (ex.positive) {
      mask_file = std::string(name) + "_mask.pgm";
      write_mask_pgm(ex.mask_grid(), dir / mask_file);
    }
    manifest << "ex " << (ex.positive ? "pos" : "neg") << " pick "
             << fmt_d(ex.source_pick.x()) << " " << fmt_d(ex.source_pick.y())
             << " center " << fmt_d(ex.crop_center.x()) << " "
             << fmt_d(ex.crop_center.y()) << " scale " << fmt_d(ex.scale)
             << " step " << ex.source_step << " patch " << patch_file
             << " mask " << mask_file << "\n";
  }
}

std::vector<TrainingExample> load_examples(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "examples.manifest");
  if (!manifest) {
    throw std::runtime_error("cannot read examples manifest in " + dir.string());
  }
  std::string line;
  std::getline(manifest, line);
  if (line != "segarena-examples v1") {
    throw std::runtime_error("bad examples manifest in " + dir.string());
  }
  std::vector<TrainingExample> out;
  std::string tag, label, kw, patch_file, mask_file;
  while (manifest >> tag) {
    if (tag != "ex") throw std::runtime_error("bad example record");
    Vec2 pick, center;
    double scale = 1.0;
    std::uint64_t step = 0;
    manifest >> label >> kw >> pick.x() >> pick.y() >> kw >> center.x() >>
        center.y() >> kw >> scale >> kw >> step >> kw >> patch_file >> kw >>
        mask_file;
    const Image patch = read_image_ppm(dir / patch_file);
    MaskGrid mask;
    const bool positive = label == "pos";
    if (positive) mask = read_mask_pgm(dir / mask_file);
    out.push_back(
        TrainingExample::make(patch, mask, positive, pick, center, scale, step));
  }
  return out;
}

}  // namespace segarena::pseudo
