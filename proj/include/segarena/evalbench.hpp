#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "segarena/config.hpp"
#include "segarena/model.hpp"
#include "segarena/sim.hpp"
#include "segarena/types.hpp"

namespace segarena::evalbench {

struct EvalScene {
  Image image;
  std::vector<MaskGrid> gt;
};

/// Render plus the simulator's true visible masks.
EvalScene scene_from_state(const sim::ArenaState& state);

/// Greedy one-to-one matching in descending score order: each prediction
/// takes the highest-IoU still-unmatched ground truth with IoU >= thresh,
/// otherwise it is a false positive. Returns (prediction index, matched gt
/// index or nullopt) in the greedy processing order.
std::vector<std::pair<int, std::optional<int>>> match_predictions(
    const std::vector<Hypothesis>& preds, const std::vector<MaskGrid>& gt,
    double iou_thresh);

struct PrPoint {
  double score = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct APResult {
  double iou_thresh = 0.0;
  double ap = 0.0;
  std::vector<PrPoint> pr;
};

/// Predictions pooled across scenes by score; AP is the area under the
/// precision-envelope-interpolated PR curve. Throws when there is no ground
/// truth at all.
APResult average_precision(const std::vector<EvalScene>& scenes,
                           const std::vector<std::vector<Hypothesis>>& preds,
                           double iou_thresh);

/// Recall of the ground truth at each requested precision level: the deepest
/// score cut whose precision still reaches the level. Unreachable levels
/// come back as nullopt.
std::vector<std::optional<double>> recall_at_precision(
    const std::vector<EvalScene>& scenes,
    const std::vector<std::vector<Hypothesis>>& preds, double iou_thresh,
    const std::vector<double>& precision_levels);

/// Convenience wrapper running inference on every scene first.
std::vector<std::optional<double>> hypothesis_recall(
    const model::ModelParams& params, const std::vector<EvalScene>& scenes,
    const model::InferParams& infer, double iou_thresh,
    const std::vector<double>& precision_levels);

// ---------------------------------------------------------------------------
// Generalization matrix: {train,test} objects x {train,test} backgrounds

struct GenCell {
  double ap30 = 0.0;
  double ap50 = 0.0;
};

struct GeneralizationMatrix {
  // indexed [objects][backgrounds], 0 = train split, 1 = test split
  GenCell cells[2][2];
  double object_drop30 = 0.0, object_drop50 = 0.0;  // A - C
  double background_drop30 = 0.0, background_drop50 = 0.0;  // A - B
};

GeneralizationMatrix generalization_matrix(const model::ModelParams& params,
                                           const Config& cfg,
                                           std::uint64_t seed);

/// Background spec for the given split, cycling through its seed range.
sim::BackgroundSpec background_for(const Config& cfg, sim::Split split,
                                   int index);

/// Deterministic batch of fresh evaluation scenes for a split pair.
std::vector<EvalScene> make_eval_scenes(const Config& cfg, sim::Split objects,
                                        sim::Split backgrounds, int count,
                                        std::uint64_t seed);

// ---------------------------------------------------------------------------
// Bottom-up colour-threshold baseline (no learning): pixels far from the
// image's median colour, connected components as hypotheses.

std::vector<Hypothesis> color_threshold_baseline(const Image& image,
                                                 double dist_thresh,
                                                 double min_area_frac,
                                                 double nms_thresh);

// ---------------------------------------------------------------------------
// Report emission: one CSV and one SVG per chart, byte-deterministic.

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct LineChart {
  std::string name;  // file stem
  std::string x_label, y_label;
  std::vector<Series> series;
};

struct BarChart {
  std::string name;
  std::string y_label;
  std::vector<std::pair<std::string, double>> bars;
};

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_line_chart_svg(const std::filesystem::path& path,
                          const LineChart& chart);
void write_bar_chart_svg(const std::filesystem::path& path,
                         const BarChart& chart);

/// Emits chart.csv + chart.svg for every chart into out_dir.
void emit_report(const std::vector<LineChart>& lines,
                 const std::vector<BarChart>& bars,
                 const std::filesystem::path& out_dir);

}  // namespace segarena::evalbench
