#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "segarena/image_io.hpp"
#include "segarena/mask.hpp"
#include "segarena/rng.hpp"

using namespace segarena;
using mask::Connectivity;

namespace {

MaskGrid empty_mask(int w, int h) { return MaskGrid::Constant(h, w, false); }

MaskGrid block(int w, int h, int x0, int y0, int bw, int bh) {
  MaskGrid m = empty_mask(w, h);
  for (int y = y0; y < y0 + bh; ++y) {
    for (int x = x0; x < x0 + bw; ++x) m(y, x) = true;
  }
  return m;
}

MaskGrid random_mask(int w, int h, double density, Rng& rng) {
  MaskGrid m(h, w);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform() < density;
  return m;
}

/// Rasterized bar of given orientation through the grid centre.
MaskGrid rotated_bar(int side, double angle, double length, double width) {
  MaskGrid m = empty_mask(side, side);
  const double c = (side - 1) / 2.0;
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double dx = x - c, dy = y - c;
      const double along = dx * ca + dy * sa;
      const double across = -dx * sa + dy * ca;
      if (std::abs(along) <= length / 2 && std::abs(across) <= width / 2) {
        m(y, x) = true;
      }
    }
  }
  return m;
}

}  // namespace

TEST_CASE("iou identities") {
  const MaskGrid a = block(8, 8, 1, 1, 3, 3);
  CHECK(mask::iou(a, a) == doctest::Approx(1.0));
  const MaskGrid b = block(8, 8, 5, 5, 2, 2);
  CHECK(mask::iou(a, b) == doctest::Approx(0.0));
  // 2x2 block inside a 4x4 block: hand pixel count 4/16
  const MaskGrid inner = block(8, 8, 2, 2, 2, 2);
  const MaskGrid outer = block(8, 8, 1, 1, 4, 4);
  CHECK(mask::iou(inner, outer) == doctest::Approx(0.25));
}

TEST_CASE("iou conventions and errors") {
  CHECK(mask::iou(empty_mask(4, 4), empty_mask(4, 4)) == doctest::Approx(1.0));
  CHECK_THROWS(mask::iou(empty_mask(4, 4), empty_mask(5, 4)));
}

TEST_CASE("iou is symmetric and bounded (randomized)") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const MaskGrid a = random_mask(10, 10, 0.4, rng);
    const MaskGrid b = random_mask(10, 10, 0.4, rng);
    const double ab = mask::iou(a, b);
    CHECK(ab == mask::iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
  }
}

TEST_CASE("connected components basics") {
  CHECK(mask::connected_components(empty_mask(6, 6), Connectivity::Four).empty());

  // two diagonal-touching pixels: 4-connectivity splits, 8 joins
  MaskGrid diag = empty_mask(6, 6);
  diag(2, 2) = true;
  diag(3, 3) = true;
  CHECK(mask::connected_components(diag, Connectivity::Four).size() == 2);
  CHECK(mask::connected_components(diag, Connectivity::Eight).size() == 1);

  const MaskGrid rect = block(6, 6, 1, 2, 3, 2);
  const auto comps = mask::connected_components(rect, Connectivity::Four);
  REQUIRE(comps.size() == 1);
  CHECK((comps[0] == rect).all());
}

TEST_CASE("connected components partition the input (randomized)") {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const MaskGrid m = random_mask(12, 12, 0.35, rng);
    const auto comps = mask::connected_components(m, Connectivity::Eight);
    MaskGrid uni = empty_mask(12, 12);
    std::int64_t total = 0;
    std::int64_t prev = m.size() + 1;
    for (const auto& c : comps) {
      CHECK_FALSE((uni && c).any());  // pairwise disjoint
      uni = uni || c;
      const auto area = mask_area(c);
      CHECK(area <= prev);  // sorted by descending size
      prev = area;
      total += area;
    }
    CHECK((uni == m).all());
    CHECK(total == mask_area(m));
  }
}

TEST_CASE("centroid") {
  MaskGrid single = empty_mask(10, 10);
  single(7, 3) = true;  // (x=3, y=7)
  const Vec2 c1 = mask::centroid(single);
  CHECK(c1.x() == doctest::Approx(3.0));
  CHECK(c1.y() == doctest::Approx(7.0));

  const Vec2 c2 = mask::centroid(block(10, 10, 0, 0, 2, 2));
  CHECK(c2.x() == doctest::Approx(0.5));
  CHECK(c2.y() == doctest::Approx(0.5));

  // symmetric cross centred at (5, 4)
  MaskGrid cross = empty_mask(11, 11);
  for (int x = 3; x <= 7; ++x) cross(4, x) = true;
  for (int y = 2; y <= 6; ++y) cross(y, 5) = true;
  const Vec2 c3 = mask::centroid(cross);
  CHECK(c3.x() == doctest::Approx(5.0));
  CHECK(c3.y() == doctest::Approx(4.0));

  CHECK_THROWS(mask::centroid(empty_mask(4, 4)));
}

TEST_CASE("principal axis on bars") {
  CHECK(mask::principal_axis(block(12, 12, 1, 5, 10, 1)) == doctest::Approx(0.0));
  CHECK(mask::principal_axis(block(12, 12, 5, 1, 1, 10)) ==
        doctest::Approx(M_PI / 2));

  // 45-degree diagonal line of pixels
  MaskGrid diag = empty_mask(12, 12);
  for (int i = 1; i < 11; ++i) diag(i, i) = true;
  CHECK(mask::principal_axis(diag) == doctest::Approx(M_PI / 4).epsilon(1e-6));

  CHECK_THROWS(mask::principal_axis(empty_mask(4, 4)));
  MaskGrid one = empty_mask(4, 4);
  one(1, 1) = true;
  CHECK_THROWS(mask::principal_axis(one));
}

TEST_CASE("principal axis: isotropic tie-break and invariances") {
  CHECK(mask::principal_axis(block(10, 10, 2, 2, 4, 4)) == doctest::Approx(0.0));

  //

  // translation invariance and rotation covariance on rasterized bars
  for (const double deg : {10.0, 35.0, 60.0, 120.0, 155.0}) {
    const double angle = deg * M_PI / 180.0;
    const MaskGrid bar = rotated_bar(41, angle, 30, 5);
    double got = mask::principal_axis(bar);
    double want = std::fmod(angle, M_PI);
    double diff = std::abs(got - want);
    diff = std::min(diff, M_PI - diff);
    CHECK(diff < 2.0 * M_PI / 180.0);  // rasterization tolerance
  }
  const MaskGrid a = block(20, 20, 2, 3, 8, 2);
  const MaskGrid b = block(20, 20, 9, 12, 8, 2);
  CHECK(mask::principal_axis(a) == doctest::Approx(mask::principal_axis(b)));
}

TEST_CASE("difference mask") {
  Image a(16, 16), b(16, 16);
  a.r.setConstant(0.5);
  b = a;
  const Vec2 center(8, 8);
  CHECK_FALSE(mask::difference_mask(a, b, center, 8, 0.05).any());

  // one changed pixel inside the window
  b.r(8, 8) = 0.9;
  const MaskGrid d1 = mask::difference_mask(a, b, center, 8, 0.05);
  CHECK(mask_area(d1) == 1);
  CHECK(d1(8, 8));

  // changed pixel outside the window is ignored
  Image c = a;
  c.g(15, 15) = 1.0;
  CHECK_FALSE(mask::difference_mask(a, c, center, 6, 0.05).any());

  // max over channels, not sum: sub-threshold change in every channel
  Image e = a;
  e.r(8, 8) += 0.04;
  e.g(8, 8) += 0.04;
  e.b(8, 8) += 0.04;
  CHECK_FALSE(mask::difference_mask(a, e, center, 8, 0.05).any());

  CHECK_THROWS(mask::difference_mask(a, Image(8, 8), center, 8, 0.05));
  CHECK_THROWS(mask::difference_mask(a, b, center, 0.0, 0.05));
}

TEST_CASE("difference mask of an image with itself is empty (randomized)") {
  Rng rng(3);
  Image img(20, 20);
  for (int c = 0; c < 3; ++c) {
    for (Eigen::Index i = 0; i < img.r.size(); ++i) {
      img.channel(c).data()[i] = rng.uniform();
    }
  }
  CHECK_FALSE(mask::difference_mask(img, img, {10, 10}, 40, 0.0).any());
}

TEST_CASE("nms") {
  const MaskGrid m1 = block(16, 16, 2, 2, 5, 5);
  const MaskGrid m2 = block(16, 16, 10, 10, 4, 4);

  SUBCASE("duplicate masks keep the higher score") {
    std::vector<Hypothesis> hyps;
    hyps.push_back({m1, 0.8, {4, 4}, 1.0});
    hyps.push_back({m1, 0.9, {4, 4}, 1.0});
    const auto kept = mask::nms(hyps, 0.5);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].score == doctest::Approx(0.9));
  }

  SUBCASE("disjoint masks both survive, sorted by score") {
    std::vector<Hypothesis> hyps;
    hyps.push_back({m1, 0.5, {4, 4}, 1.0});
    hyps.push_back({m2, 0.7, {12, 12}, 1.0});
    const auto kept = mask::nms(hyps, 0.3);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].score == doctest::Approx(0.7));
    CHECK(kept[1].score == doctest::Approx(0.5));
  }

  SUBCASE("overlap chain A-B-C keeps A and C") {
    // A overlaps B, B overlaps C, A and C disjoint; scores A>B>C.
    const MaskGrid A = block(20, 20, 0, 0, 6, 4);
    const MaskGrid B = block(20, 20, 4, 0, 6, 4);
    const MaskGrid C = block(20, 20, 8, 0, 6, 4);
    std::vector<Hypothesis> hyps;
    hyps.push_back({A, 0.9, {3, 2}, 1.0});
    hyps.push_back({B, 0.8, {7, 2}, 1.0});
    hyps.push_back({C, 0.7, {11, 2}, 1.0});
    const auto kept = mask::nms(hyps, 0.1);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].score == doctest::Approx(0.9));
    CHECK(kept[1].score == doctest::Approx(0.7));
  }

  SUBCASE("suppressed hypotheses overlap a kept higher-scoring one") {
    Rng rng(19);
    std::vector<Hypothesis> hyps;
    for (int i = 0; i < 30; ++i) {
      const int x = rng.uniform_int(0, 10);
      const int y = rng.uniform_int(0, 10);
      hyps.push_back({block(16, 16, x, y, 5, 5), rng.uniform(), {x + 2.0, y + 2.0}, 1.0});
    }
    const double thresh = 0.4;
    const auto kept = mask::nms(hyps, thresh);
    CHECK(kept.size() <= hyps.size());
    for (const auto& h : hyps) {
      bool in_kept = false;
      for (const auto& k : kept) {
        if (k.score == h.score && (k.mask == h.mask).all()) in_kept = true;
      }
      if (in_kept) continue;
      bool overlaps_better = false;
      for (const auto& k : kept) {
        if (k.score >= h.score && mask::iou(k.mask, h.mask) > thresh) {
          overlaps_better = true;
        }
      }
      CHECK(overlaps_better);
    }
  }
}

TEST_CASE("mask file round trip") {
  Rng rng(31);
  MaskGrid m(17, 23);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform() < 0.5;
  const auto path = std::filesystem::temp_directory_path() / "segarena_mask_test.pgm";
  write_mask_pgm(m, path);
  const MaskGrid back = read_mask_pgm(path);
  REQUIRE(back.rows() == m.rows());
  REQUIRE(back.cols() == m.cols());
  CHECK((back == m).all());
  std::filesystem::remove(path);
}

TEST_CASE("image file round trip is exact on the 8-bit grid") {
  Rng rng(37);
  Image img(9, 14);
  for (int c = 0; c < 3; ++c) {
    for (Eigen::Index i = 0; i < img.r.size(); ++i) {
      img.channel(c).data()[i] = rng.uniform();
    }
  }
  quantize_image(img);
  const auto path = std::filesystem::temp_directory_path() / "segarena_img_test.ppm";
  write_image_ppm(img, path);
  const Image back = read_image_ppm(path);
  CHECK(back == img);
  std::filesystem::remove(path);
}
