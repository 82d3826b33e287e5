#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "segarena/evalbench.hpp"
#include "segarena/mask.hpp"

using namespace segarena;
using namespace segarena::evalbench;

namespace {

MaskGrid rect(int w, int h, int x0, int y0, int bw, int bh) {
  MaskGrid m = MaskGrid::Constant(h, w, false);
  for (int y = y0; y < y0 + bh; ++y) {
    for (int x = x0; x < x0 + bw; ++x) m(y, x) = true;
  }
  return m;
}

Hypothesis hyp(MaskGrid m, double score) {
  Hypothesis h;
  h.center = mask::centroid(m);
  h.mask = std::move(m);
  h.score = score;
  h.scale = 1.0;
  return h;
}

/// Scene whose "image" is unused by the matcher; gt set explicitly.
EvalScene scene_with_gt(std::vector<MaskGrid> gt) {
  EvalScene s;
  s.image = Image(4, 4);
  s.gt = std::move(gt);
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("match_predictions basics") {
  const MaskGrid g1 = rect(32, 32, 2, 2, 8, 8);
  const MaskGrid g2 = rect(32, 32, 20, 20, 8, 8);

  SUBCASE("perfect predictions all match") {
    std::vector<Hypothesis> preds{hyp(g1, 0.9), hyp(g2, 0.8)};
    const auto m = match_predictions(preds, {g1, g2}, 0.5);
    REQUIRE(m.size() == 2);
    CHECK(m[0].second.has_value());
    CHECK(m[1].second.has_value());
    CHECK(*m[0].second != *m[1].second);
  }

  SUBCASE("empty predictions") {
    CHECK(match_predictions({}, {g1, g2}, 0.5).empty());
  }

  SUBCASE("one gt cannot match twice") {
    std::vector<Hypothesis> preds{hyp(g1, 0.9), hyp(g1, 0.8)};
    const auto m = match_predictions(preds, {g1}, 0.5);
    REQUIRE(m.size() == 2);
    CHECK(m[0].second.has_value());
    CHECK_FALSE(m[1].second.has_value());
  }

  SUBCASE("threshold validation") {
    CHECK_THROWS(match_predictions({}, {g1}, 0.0));
    CHECK_THROWS(match_predictions({}, {g1}, 1.5));
  }
}

TEST_CASE("greedy matcher agrees with the exhaustive assignment oracle") {
  Rng rng(123);
  for (int trial = 0; trial < 300; ++trial) {
    const int np = rng.uniform_int(0, 5);
    const int ng = rng.uniform_int(1, 5);
    std::vector<Hypothesis> preds;
    std::vector<MaskGrid> gt;
    for (int g = 0; g < ng; ++g) {
      gt.push_back(rect(24, 24, rng.uniform_int(0, 12), rng.uniform_int(0, 12),
                        rng.uniform_int(3, 10), rng.uniform_int(3, 10)));
    }
    for (int p = 0; p < np; ++p) {
      preds.push_back(hyp(rect(24, 24, rng.uniform_int(0, 12), rng.uniform_int(0, 12),
                               rng.uniform_int(3, 10), rng.uniform_int(3, 10)),
                          rng.uniform()));
    }
    const double thresh = 0.3;

    const auto got = match_predictions(preds, gt, thresh);

    // oracle works in descending-score order
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return preds[a].score > preds[b].score;
    });
    std::vector<std::vector<double>> iou_table(preds.size(),
                                               std::vector<double>(gt.size()));
    for (std::size_t i = 0; i < order.size(); ++i) {
      for (std::size_t g = 0; g < gt.size(); ++g) {
        iou_table[i][g] = mask::iou(preds[order[i]].mask, gt[g]);
      }
    }
    const auto want = oracles::match_oracle(iou_table, gt.size(), thresh);

    REQUIRE(got.size() == order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      CHECK(got[i].first == static_cast<int>(order[i]));
      const int want_gt = want.assignment[i];
      if (want_gt < 0) {
        CHECK_FALSE(got[i].second.has_value());
      } else {
        REQUIRE(got[i].second.has_value());
        // equal-IoU ties can resolve to different gts; require equal IoU
        CHECK(mask::iou(preds[order[i]].mask, gt[static_cast<std::size_t>(*got[i].second)]) ==
              doctest::Approx(iou_table[i][static_cast<std::size_t>(want_gt)]));
      }
    }
  }
}

TEST_CASE("average precision endpoints") {
  const MaskGrid g1 = rect(32, 32, 2, 2, 8, 8);
  const MaskGrid g2 = rect(32, 32, 20, 20, 8, 8);
  const std::vector<EvalScene> scenes{scene_with_gt({g1, g2})};

  SUBCASE("exact copies of gt with distinct scores give AP 1") {
    const std::vector<std::vector<Hypothesis>> preds{{hyp(g1, 0.9), hyp(g2, 0.7)}};
    CHECK(average_precision(scenes, preds, 0.5).ap == doctest::Approx(1.0));
  }

  SUBCASE("fully disjoint predictions give AP 0") {
    const std::vector<std::vector<Hypothesis>> preds{
        {hyp(rect(32, 32, 12, 2, 4, 4), 0.9)}};
    CHECK(average_precision(scenes, preds, 0.5).ap == doctest::Approx(0.0));
  }

  SUBCASE("no ground truth at all is an error") {
    const std::vector<EvalScene> empty{scene_with_gt({})};
    const std::vector<std::vector<Hypothesis>> preds{{hyp(g1, 0.9)}};
    CHECK_THROWS(average_precision(empty, preds, 0.5));
  }
}

TEST_CASE("hand-built PR table reproduced exactly") {
  // Scene A: gts a1, a2; preds p1 (0.9, hits a1), p2 (0.7, miss).
  // Scene B: gt b1; preds p3 (0.8, hits b1), p4 (0.6, miss).
  // Pooled by score: TP, TP, FP, FP ->
  //   precision 1, 1, 2/3, 1/2; recall 1/3, 2/3, 2/3, 2/3.
  // Envelope AP = 1/3 * 1 + 1/3 * 1 = 2/3.
  const MaskGrid a1 = rect(32, 32, 2, 2, 6, 6);
  const MaskGrid a2 = rect(32, 32, 20, 2, 6, 6);
  const MaskGrid b1 = rect(32, 32, 4, 20, 6, 6);
  const std::vector<EvalScene> scenes{scene_with_gt({a1, a2}),
                                      scene_with_gt({b1})};
  std::vector<std::vector<Hypothesis>> preds(2);
  preds[0].push_back(hyp(a1, 0.9));
  preds[0].push_back(hyp(rect(32, 32, 12, 24, 5, 5), 0.7));
  preds[1].push_back(hyp(b1, 0.8));
  preds[1].push_back(hyp(rect(32, 32, 24, 24, 5, 5), 0.6));

  const APResult res = average_precision(scenes, preds, 0.5);
  CHECK(res.ap == doctest::Approx(2.0 / 3.0));
  REQUIRE(res.pr.size() == 4);
  CHECK(res.pr[0].precision == doctest::Approx(1.0));
  CHECK(res.pr[1].precision == doctest::Approx(1.0));
  CHECK(res.pr[2].precision == doctest::Approx(2.0 / 3.0));
  CHECK(res.pr[3].precision == doctest::Approx(0.5));
  CHECK(res.pr[3].recall == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("AP is invariant to positive monotone score rescaling") {
  Rng rng(321);
  const MaskGrid g1 = rect(32, 32, 2, 2, 10, 8);
  const MaskGrid g2 = rect(32, 32, 18, 16, 8, 10);
  const std::vector<EvalScene> scenes{scene_with_gt({g1, g2})};
  std::vector<std::vector<Hypothesis>> preds(1);
  for (int i = 0; i < 8; ++i) {
    preds[0].push_back(hyp(rect(32, 32, rng.uniform_int(0, 20), rng.uniform_int(0, 20),
                                rng.uniform_int(4, 10), rng.uniform_int(4, 10)),
                           0.1 + 0.8 * rng.uniform()));
  }
  const double base = average_precision(scenes, preds, 0.3).ap;
  auto rescaled = preds;
  for (auto& h : rescaled[0]) h.score = 0.2 + h.score * h.score;  // monotone on (0,1)
  CHECK(average_precision(scenes, rescaled, 0.3).ap == doctest::Approx(base));
}

TEST_CASE("a lower-scored duplicate of a matched prediction cannot raise AP") {
  Rng rng(654);
  for (int trial = 0; trial < 50; ++trial) {
    const MaskGrid g1 = rect(32, 32, 2, 2, 10, 8);
    const MaskGrid g2 = rect(32, 32, 18, 16, 8, 10);
    const std::vector<EvalScene> scenes{scene_with_gt({g1, g2})};
    std::vector<std::vector<Hypothesis>> preds(1);
    preds[0].push_back(hyp(g1, 0.9));
    for (int i = 0; i < 4; ++i) {
      preds[0].push_back(hyp(rect(32, 32, rng.uniform_int(0, 20), rng.uniform_int(0, 20),
                                  rng.uniform_int(4, 10), rng.uniform_int(4, 10)),
                             0.2 + 0.5 * rng.uniform()));
    }
    const double base = average_precision(scenes, preds, 0.3).ap;
    auto dup = preds;
    dup[0].push_back(hyp(g1, 0.15));  // duplicate, below everything
    CHECK(average_precision(scenes, dup, 0.3).ap <= base + 1e-12);
  }
}

TEST_CASE("recall at precision levels") {
  const MaskGrid g1 = rect(32, 32, 2, 2, 8, 8);
  const MaskGrid g2 = rect(32, 32, 20, 20, 8, 8);
  const std::vector<EvalScene> scenes{scene_with_gt({g1, g2})};

  SUBCASE("perfect predictions reach recall 1 at every level") {
    const std::vector<std::vector<Hypothesis>> preds{{hyp(g1, 0.9), hyp(g2, 0.8)}};
    const auto rec = recall_at_precision(scenes, preds, 0.5, {0.5, 0.7, 0.9});
    for (const auto& r : rec) {
      REQUIRE(r.has_value());
      CHECK(*r == doctest::Approx(1.0));
    }
  }

  SUBCASE("recall is non-increasing in the required precision") {
    Rng rng(777);
    std::vector<std::vector<Hypothesis>> preds(1);
    preds[0].push_back(hyp(g1, 0.95));
    for (int i = 0; i < 6; ++i) {
      preds[0].push_back(hyp(rect(32, 32, rng.uniform_int(0, 20), rng.uniform_int(0, 20),
                                  rng.uniform_int(4, 10), rng.uniform_int(4, 10)),
                             rng.uniform()));
    }
    const auto rec = recall_at_precision(scenes, preds, 0.5,
                                         {0.2, 0.4, 0.6, 0.8, 1.0});
    double prev = 2.0;
    for (const auto& r : rec) {
      const double v = r.value_or(0.0);
      CHECK(v <= prev + 1e-12);
      prev = v;
    }
  }

  SUBCASE("unreachable precision is undefined") {
    // only a false positive above, so precision never reaches 0.9
    const std::vector<std::vector<Hypothesis>> preds{
        {hyp(rect(32, 32, 12, 12, 4, 4), 0.9)}};
    const auto rec = recall_at_precision(scenes, preds, 0.5, {0.9});
    CHECK_FALSE(rec[0].has_value());
  }
}

TEST_CASE("colour-threshold baseline finds bright objects on a muted scene") {
  sim::SimParams sp;
  sp.flicker_prob = 0.0;
  const auto& pool = sim::object_pool(sim::Split::Train);
  const sim::ArenaState state = sim::spawn_scene(sp, {0, 23}, pool, Rng(99, 2));
  const EvalScene scene = scene_from_state(state);
  const auto hyps = color_threshold_baseline(scene.image, 0.15, 0.002, 0.5);
  CHECK_FALSE(hyps.empty());
  for (std::size_t i = 1; i < hyps.size(); ++i) {
    CHECK(hyps[i].score <= hyps[i - 1].score);
  }
  // it should recover at least part of the ground truth on an easy scene
  const std::vector<std::vector<Hypothesis>> preds{hyps};
  const double ap = average_precision({scene}, preds, 0.3).ap;
  CHECK(ap > 0.05);
}

TEST_CASE("background split helper uses disjoint seed ranges") {
  const Config cfg = Config::defaults();
  for (int i = 0; i < 20; ++i) {
    const auto train = background_for(cfg, sim::Split::Train, i);
    const auto test = background_for(cfg, sim::Split::Test, i);
    CHECK(train.seed >= 0);
    CHECK(train.seed <= 99);
    CHECK(test.seed >= 150);
    CHECK(test.seed <= 199);
  }
}

TEST_CASE("eval scene batches are deterministic") {
  const Config cfg = Config::defaults();
  const auto a = make_eval_scenes(cfg, sim::Split::Test, sim::Split::Test, 3, 42);
  const auto b = make_eval_scenes(cfg, sim::Split::Test, sim::Split::Test, 3, 42);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a[i].image == b[i].image);
    REQUIRE(a[i].gt.size() == b[i].gt.size());
    CHECK(a[i].gt.size() >= 4);
    // gt masks pairwise disjoint
    for (std::size_t x = 0; x < a[i].gt.size(); ++x) {
      for (std::size_t y = x + 1; y < a[i].gt.size(); ++y) {
        CHECK_FALSE((a[i].gt[x] && a[i].gt[y]).any());
      }
    }
  }
}

TEST_CASE("report emission is deterministic and handles empty input") {
  const auto dir = std::filesystem::temp_directory_path() / "segarena_report_test";
  std::filesystem::remove_all(dir);

  LineChart chart;
  chart.name = "ap_vs_interactions";
  chart.x_label = "interactions";
  chart.y_label = "ap";
  chart.series.push_back({"AP@0.3", {{250, 0.2}, {1000, 0.5}, {2000, 0.62}}});
  BarChart bars;
  bars.name = "generalization_drops";
  bars.y_label = "drop";
  bars.bars = {{"obj", 0.1}, {"bg", 0.2}};

  emit_report({chart}, {bars}, dir);
  const std::string csv1 = slurp(dir / "ap_vs_interactions.csv");
  const std::string svg1 = slurp(dir / "ap_vs_interactions.svg");
  CHECK(csv1.find("AP@0.3,250,0.2") != std::string::npos);
  // row count = header + one per point
  CHECK(std::count(csv1.begin(), csv1.end(), '\n') == 4);
  CHECK(svg1.find("<polyline") != std::string::npos);

  emit_report({chart}, {bars}, dir);
  CHECK(slurp(dir / "ap_vs_interactions.csv") == csv1);
  CHECK(slurp(dir / "ap_vs_interactions.svg") == svg1);

  LineChart empty_chart;
  empty_chart.name = "empty";
  empty_chart.x_label = "x";
  empty_chart.y_label = "y";
  emit_report({empty_chart}, {}, dir);
  const std::string empty_csv = slurp(dir / "empty.csv");
  CHECK(std::count(empty_csv.begin(), empty_csv.end(), '\n') == 1);  // header only
  CHECK(slurp(dir / "empty.svg").find("<line") != std::string::npos);  // axes

  std::filesystem::remove_all(dir);
}
