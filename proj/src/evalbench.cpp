#include "segarena/evalbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "segarena/mask.hpp"

namespace segarena::evalbench {
namespace {

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct Pooled {
  double score;
  int scene;
  int pred;
  bool tp;
};

/// Per-scene greedy matches flattened into one score-ranked TP/FP list.
std::vector<Pooled> pool_matches(const std::vector<EvalScene>& scenes,
                                 const std::vector<std::vector<Hypothesis>>& preds,
                                 double iou_thresh, std::int64_t* total_gt) {
  if (scenes.size() != preds.size()) {
    throw std::invalid_argument("evalbench: scenes/preds size mismatch");
  }
  *total_gt = 0;
  std::vector<Pooled> pooled;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    *total_gt += static_cast<std::int64_t>(scenes[s].gt.size());
    const auto matches = match_predictions(preds[s], scenes[s].gt, iou_thresh);
    for (const auto& [pi, gi] : matches) {
      pooled.push_back({preds[s][static_cast<std::size_t>(pi)].score,
                        static_cast<int>(s), pi, gi.has_value()});
    }
  }
  std::sort(pooled.begin(), pooled.end(), [](const Pooled& a, const Pooled& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.scene != b.scene) return a.scene < b.scene;
    return a.pred < b.pred;
  });
  return pooled;
}

std::vector<PrPoint> pr_sweep(const std::vector<Pooled>& pooled,
                              std::int64_t total_gt) {
  std::vector<PrPoint> pr;
  pr.reserve(pooled.size());
  std::int64_t tp = 0;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    if (pooled[i].tp) ++tp;
    PrPoint p;
    p.score = pooled[i].score;
    p.precision = static_cast<double>(tp) / static_cast<double>(i + 1);
    p.recall = total_gt > 0 ? static_cast<double>(tp) / static_cast<double>(total_gt) : 0.0;
    pr.push_back(p);
  }
  return pr;
}

}  // namespace

EvalScene scene_from_state(const sim::ArenaState& state) {
  EvalScene scene;
  scene.image = sim::render(state);
  for (auto& [id, m] : sim::true_masks(state)) scene.gt.push_back(std::move(m));
  return scene;
}

std::vector<std::pair<int, std::optional<int>>> match_predictions(
    const std::vector<Hypothesis>& preds, const std::vector<MaskGrid>& gt,
    double iou_thresh) {
  if (!(iou_thresh > 0.0) || iou_thresh > 1.0) {
    throw std::invalid_argument("match_predictions: iou_thresh outside (0,1]");
  }
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].score > preds[b].score;
  });

  std::vector<bool> taken(gt.size(), false);
  std::vector<std::pair<int, std::optional<int>>> out;
  out.reserve(preds.size());
  for (const std::size_t pi : order) {
    double best_iou = 0.0;
    int best_gt = -1;
    for (std::size_t gi = 0; gi < gt.size(); ++gi) {
      if (taken[gi]) continue;
      const double v = mask::iou(preds[pi].mask, gt[gi]);
      if (v > best_iou) {
        best_iou = v;
        best_gt = static_cast<int>(gi);
      }
    }
    if (best_gt >= 0 && best_iou >= iou_thresh) {
      taken[static_cast<std::size_t>(best_gt)] = true;
      out.emplace_back(static_cast<int>(pi), best_gt);
    } else {
      out.emplace_back(static_cast<int>(pi), std::nullopt);
    }
  }
  return out;
}

APResult average_precision(const std::vector<EvalScene>& scenes,
                           const std::vector<std::vector<Hypothesis>>& preds,
                           double iou_thresh) {
  std::int64_t total_gt = 0;
  const auto pooled = pool_matches(scenes, preds, iou_thresh, &total_gt);
  if (total_gt == 0) {
    throw std::invalid_argument("average_precision: no ground truth");
  }
  APResult res;
  res.iou_thresh = iou_thresh;
  res.pr = pr_sweep(pooled, total_gt);

  // Area under the precision envelope: at each recall, the best precision
  // achievable at that recall or beyond.
  double ap = 0.0;
  double env = 0.0;
  double prev_recall = 0.0;
  std::vector<double> envs(res.pr.size());
  for (std::size_t i = res.pr.size(); i-- > 0;) {
    env = std::max(env, res.pr[i].precision);
    envs[i] = env;
  }
  for (std::size_t i = 0; i < res.pr.size(); ++i) {
    ap += (res.pr[i].recall - prev_recall) * envs[i];
    prev_recall = res.pr[i].recall;
  }
  res.ap = ap;
  return res;
}

std::vector<std::optional<double>> recall_at_precision(
    const std::vector<EvalScene>& scenes,
    const std::vector<std::vector<Hypothesis>>& preds, double iou_thresh,
    const std::vector<double>& precision_levels) {
  std::int64_t total_gt = 0;
  const auto pooled = pool_matches(scenes, preds, iou_thresh, &total_gt);
  const auto pr = pr_sweep(pooled, total_gt);
  std::vector<std::optional<double>> out;
  out.reserve(precision_levels.size());
  for (const double level : precision_levels) {
    std::optional<double> best;
    for (const PrPoint& p : pr) {
      if (p.precision >= level && (!best || p.recall > *best)) best = p.recall;
    }
    out.push_back(best);
  }
  return out;
}

std::vector<std::optional<double>> hypothesis_recall(
    const model::ModelParams& params, const std::vector<EvalScene>& scenes,
    const model::InferParams& infer, double iou_thresh,
    const std::vector<double>& precision_levels) {
  std::vector<std::vector<Hypothesis>> preds;
  preds.reserve(scenes.size());
  for (const EvalScene& s : scenes) {
    preds.push_back(model::infer_segments(params, s.image, infer));
  }
  return recall_at_precision(scenes, preds, iou_thresh, precision_levels);
}

// ---------------------------------------------------------------------------

sim::BackgroundSpec background_for(const Config& cfg, sim::Split split,
                                   int index) {
  int lo = 0, hi = 0;
  switch (split) {
    case sim::Split::Train:
      lo = cfg.get_int("splits.train_bg_lo");
      hi = cfg.get_int("splits.train_bg_hi");
      break;
    case sim::Split::Val:
      lo = cfg.get_int("splits.val_bg_lo");
      hi = cfg.get_int("splits.val_bg_hi");
      break;
    default:
      lo = cfg.get_int("splits.test_bg_lo");
      hi = cfg.get_int("splits.test_bg_hi");
      break;
  }
  const int span = hi - lo + 1;
  const int seed = lo + ((index % span) + span) % span;
  return {seed % 3, static_cast<std::uint64_t>(seed)};
}

std::vector<EvalScene> make_eval_scenes(const Config& cfg, sim::Split objects,
                                        sim::Split backgrounds, int count,
                                        std::uint64_t seed) {
  const sim::SimParams params = sim::SimParams::from_config(cfg);
  const auto& pool = sim::object_pool(objects);
  std::vector<EvalScene> scenes;
  scenes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const auto bg = background_for(cfg, backgrounds, i);
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(i)), 21);
    scenes.push_back(scene_from_state(sim::spawn_scene(params, bg, pool, rng)));
  }
  return scenes;
}

GeneralizationMatrix generalization_matrix(const model::ModelParams& params,
                                           const Config& cfg,
                                           std::uint64_t seed) {
  const int per_cell = cfg.get_int("eval.matrix_scenes");
  const model::InferParams infer = model::InferParams::from_config(cfg, "eval");
  GeneralizationMatrix out;
  const sim::Split splits[2] = {sim::Split::Train, sim::Split::Test};
  for (int oi = 0; oi < 2; ++oi) {
    for (int bi = 0; bi < 2; ++bi) {
      const auto scenes = make_eval_scenes(
          cfg, splits[oi], splits[bi], per_cell,
          Rng::mix(seed, static_cast<std::uint64_t>(oi * 2 + bi)));
      std::vector<std::vector<Hypothesis>> preds;
      preds.reserve(scenes.size());
      for (const EvalScene& s : scenes) {
        preds.push_back(model::infer_segments(params, s.image, infer));
      }
      out.cells[oi][bi].ap30 = average_precision(scenes, preds, 0.3).ap;
      out.cells[oi][bi].ap50 = average_precision(scenes, preds, 0.5).ap;
    }
  }
  out.object_drop30 = out.cells[0][0].ap30 - out.cells[1][0].ap30;
  out.object_drop50 = out.cells[0][0].ap50 - out.cells[1][0].ap50;
  out.background_drop30 = out.cells[0][0].ap30 - out.cells[0][1].ap30;
  out.background_drop50 = out.cells[0][0].ap50 - out.cells[0][1].ap50;
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Hypothesis> color_threshold_baseline(const Image& image,
                                                 double dist_thresh,
                                                 double min_area_frac,
                                                 double nms_thresh) {
  const Eigen::Index n = image.r.size();
  const auto median_of = [&](const Plane& p) {
    std::vector<double> v(p.data(), p.data() + n);
    auto mid = v.begin() + v.size() / 2;
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
  };
  const double mr = median_of(image.r);
  const double mg = median_of(image.g);
  const double mb = median_of(image.b);

  Plane dist(image.height(), image.width());
  for (Eigen::Index i = 0; i < n; ++i) {
    dist.data()[i] = std::max({std::abs(image.r.data()[i] - mr),
                               std::abs(image.g.data()[i] - mg),
                               std::abs(image.b.data()[i] - mb)});
  }
  const MaskGrid fg = (dist > dist_thresh).eval();
  const auto min_area = static_cast<std::int64_t>(
      min_area_frac * image.width() * image.height());

  std::vector<Hypothesis> hyps;
  for (MaskGrid& comp : mask::connected_components(fg, mask::Connectivity::Eight)) {
    const std::int64_t area = mask_area(comp);
    if (area < std::max<std::int64_t>(min_area, 1)) continue;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (comp.data()[i]) sum += dist.data()[i];
    }
    Hypothesis h;
    h.score = std::min(1.0, sum / static_cast<double>(area));
    h.center = mask::centroid(comp);
    h.scale = 1.0;
    h.mask = std::move(comp);
    hyps.push_back(std::move(h));
  }
  return mask::nms(std::move(hyps), nms_thresh);
}

// ---------------------------------------------------------------------------

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << (i ? "," : "") << header[i];
  }
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << row[i];
    }
    out << "\n";
  }
}

namespace {

constexpr int kChartW = 640, kChartH = 440;
constexpr int kMarginL = 70, kMarginR = 20, kMarginT = 40, kMarginB = 50;

const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                               "#9467bd", "#ff7f0e", "#8c564b"};

void svg_header(std::ofstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kChartW
      << "\" height=\"" << kChartH << "\" viewBox=\"0 0 " << kChartW << " "
      << kChartH << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kChartW / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
}

void svg_axes(std::ofstream& out, const std::string& x_label,
              const std::string& y_label) {
  const int x0 = kMarginL, y0 = kChartH - kMarginB;
  const int x1 = kChartW - kMarginR, y1 = kMarginT;
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1
      << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0
      << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kChartH - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << x_label << "</text>\n";
  out << "<text x=\"18\" y=\"" << (y0 + y1) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 18 "
      << (y0 + y1) / 2 << ")\">" << y_label << "</text>\n";
}

}  // namespace

void write_line_chart_svg(const std::filesystem::path& path,
                          const LineChart& chart) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  svg_header(out, chart.name);
  svg_axes(out, chart.x_label, chart.y_label);

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool have = false;
  for (const Series& s : chart.series) {
    for (const auto& [x, y] : s.points) {
      if (!have) {
        xmin = xmax = x;
        ymin = ymax = y;
        have = true;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  const auto px = [&](double x) {
    return kMarginL + (x - xmin) / (xmax - xmin) * (kChartW - kMarginL - kMarginR);
  };
  const auto py = [&](double y) {
    return (kChartH - kMarginB) -
           (y - ymin) / (ymax - ymin) * (kChartH - kMarginT - kMarginB);
  };

  // axis extremes
  out << "<text x=\"" << kMarginL << "\" y=\"" << kChartH - kMarginB + 16
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_g(xmin)
      << "</text>\n";
  out << "<text x=\"" << kChartW - kMarginR << "\" y=\"" << kChartH - kMarginB + 16
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << fmt_g(xmax) << "</text>\n";
  out << "<text x=\"" << kMarginL - 6 << "\" y=\"" << kChartH - kMarginB
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << fmt_g(ymin) << "</text>\n";
  out << "<text x=\"" << kMarginL - 6 << "\" y=\"" << kMarginT + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << fmt_g(ymax) << "</text>\n";

  int ci = 0;
  for (const Series& s : chart.series) {
    const char* color = kSeriesColors[ci % 6];
    if (!s.points.empty()) {
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"2\" points=\"";
      for (const auto& [x, y] : s.points) {
        out << fmt_g(px(x)) << "," << fmt_g(py(y)) << " ";
      }
      out << "\"/>\n";
      for (const auto& [x, y] : s.points) {
        out << "<circle cx=\"" << fmt_g(px(x)) << "\" cy=\"" << fmt_g(py(y))
            << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      }
    }
    out << "<text x=\"" << kChartW - kMarginR - 4 << "\" y=\""
        << kMarginT + 16 * (ci + 1) << "\" text-anchor=\"end\" "
        << "font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color
        << "\">" << s.name << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

void write_bar_chart_svg(const std::filesystem::path& path,
                         const BarChart& chart) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  svg_header(out, chart.name);
  svg_axes(out, "", chart.y_label);
  double ymax = 1e-9;
  for (const auto& [label, v] : chart.bars) ymax = std::max(ymax, v);
  const int n = static_cast<int>(chart.bars.size());
  const double span = kChartW - kMarginL - kMarginR;
  for (int i = 0; i < n; ++i) {
    const auto& [label, v] = chart.bars[static_cast<std::size_t>(i)];
    const double bw = span / std::max(1, n);
    const double x = kMarginL + i * bw + bw * 0.15;
    const double hpx =
        std::max(0.0, v / ymax) * (kChartH - kMarginT - kMarginB);
    out << "<rect x=\"" << fmt_g(x) << "\" y=\""
        << fmt_g(kChartH - kMarginB - hpx) << "\" width=\"" << fmt_g(bw * 0.7)
        << "\" height=\"" << fmt_g(hpx) << "\" fill=\"#1f77b4\"/>\n";
    out << "<text x=\"" << fmt_g(x + bw * 0.35) << "\" y=\""
        << kChartH - kMarginB + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << label << "</text>\n";
    out << "<text x=\"" << fmt_g(x + bw * 0.35) << "\" y=\""
        << fmt_g(kChartH - kMarginB - hpx - 4)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fmt_g(v) << "</text>\n";
  }
  out << "</svg>\n";
}

void emit_report(const std::vector<LineChart>& lines,
                 const std::vector<BarChart>& bars,
                 const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const LineChart& chart : lines) {
    std::vector<std::vector<std::string>> rows;
    for (const Series& s : chart.series) {
      for (const auto& [x, y] : s.points) {
        rows.push_back({s.name, fmt_g(x), fmt_g(y)});
      }
    }
    write_csv(out_dir / (chart.name + ".csv"),
              {"series", chart.x_label, chart.y_label}, rows);
    write_line_chart_svg(out_dir / (chart.name + ".svg"), chart);
  }
  for (const BarChart& chart : bars) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [label, v] : chart.bars) rows.push_back({label, fmt_g(v)});
    write_csv(out_dir / (chart.name + ".csv"), {"label", chart.y_label}, rows);
    write_bar_chart_svg(out_dir / (chart.name + ".svg"), chart);
  }
}

}  // namespace segarena::evalbench
