#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>

#include "oracles.hpp"
#include "segarena/rsl.hpp"

using namespace segarena;
using oracles::random_logits;
using oracles::random_nonempty_mask;

namespace {

LogitGrid grid2x2(double a, double b, double c, double d) {
  LogitGrid q(2, 2);
  q(0, 0) = a;
  q(0, 1) = b;
  q(1, 0) = c;
  q(1, 1) = d;
  return q;
}

}  // namespace

TEST_CASE("latent equals the argmax when already feasible") {
  // logits {+2,+1,-1,-3}, noisy mask = top row: the argmax is the top row,
  // IoU 1 >= b, so no bias is needed.
  const LogitGrid q = grid2x2(2, 1, -1, -3);
  MaskGrid m = MaskGrid::Constant(2, 2, false);
  m(0, 0) = m(0, 1) = true;
  const auto res = rsl::infer_latent(q, m, {0.6});
  CHECK(res.bias == 0.0);
  CHECK(res.iou == doctest::Approx(1.0));
  CHECK((res.latent == m).all());
}

TEST_CASE("latent flips the cheapest disagreeing pixel") {
  // Same logits, noisy mask = top-left only. The +1 pixel disagrees; its
  // flip costs bias 1 and yields IoU 1.
  const LogitGrid q = grid2x2(2, 1, -1, -3);
  MaskGrid m = MaskGrid::Constant(2, 2, false);
  m(0, 0) = true;
  const auto res = rsl::infer_latent(q, m, {0.6});
  CHECK(res.bias == doctest::Approx(1.0));
  CHECK(res.iou == doctest::Approx(1.0));
  CHECK((res.latent == m).all());
}

TEST_CASE("b = 1 forces the latent to equal the noisy mask") {
  Rng rng(101);
  for (int i = 0; i < 50; ++i) {
    const LogitGrid q = random_logits(5, 4, rng);
    const MaskGrid m = random_nonempty_mask(5, 4, 0.4, rng);
    const auto res = rsl::infer_latent(q, m, {1.0});
    CHECK((res.latent == m).all());
    CHECK(res.iou == 1.0);
  }
}

TEST_CASE("degeneracy: b = 1 loss equals plain cross-entropy") {
  Rng rng(202);
  for (int i = 0; i < 200; ++i) {
    const LogitGrid q = random_logits(8, 8, rng);
    const MaskGrid m = random_nonempty_mask(8, 8, 0.35, rng);
    const double lhs = rsl::rsl_loss(q, m, {1.0});
    const double rhs = rsl::cross_entropy(q, m);
    CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("confident correct prediction drives the loss to zero") {
  MaskGrid m = MaskGrid::Constant(4, 4, false);
  m(1, 1) = m(1, 2) = m(2, 1) = m(2, 2) = true;
  LogitGrid q(4, 4);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    q.data()[i] = m.data()[i] ? 30.0 : -30.0;
  }
  CHECK(rsl::rsl_loss(q, m, {0.5}) < 1e-12);
}

TEST_CASE("feasibility and dominance (randomized)") {
  Rng rng(303);
  for (int i = 0; i < 500; ++i) {
    const int side = 4 + rng.uniform_int(0, 4);
    const LogitGrid q = random_logits(side, side, rng);
    const MaskGrid m = random_nonempty_mask(side, side, 0.3, rng);
    for (const double b : {0.3, 0.5, 0.7, 0.9}) {
      const auto res = rsl::infer_latent(q, m, {b});
      CHECK(res.iou >= b);
      CHECK(rsl::rsl_loss(q, m, {b}) <= rsl::cross_entropy(q, m) + 1e-12);
    }
  }
}

TEST_CASE("monotone in the margin b") {
  Rng rng(404);
  for (int i = 0; i < 200; ++i) {
    const LogitGrid q = random_logits(6, 6, rng);
    const MaskGrid m = random_nonempty_mask(6, 6, 0.35, rng);
    double prev = -1.0;
    for (const double b : {0.2, 0.4, 0.6, 0.8, 1.0}) {
      const double loss = rsl::rsl_loss(q, m, {b});
      CHECK(loss >= prev - 1e-12);
      prev = loss;
    }
  }
}

TEST_CASE("agrees exactly with the exhaustive bias oracle") {
  Rng rng(505);
  for (int i = 0; i < 400; ++i) {
    const LogitGrid q = random_logits(3, 3, rng);
    const MaskGrid m = random_nonempty_mask(3, 3, 0.4, rng);
    for (const double b : {0.3, 0.6, 0.9}) {
      const auto got = rsl::infer_latent(q, m, {b});
      const auto want = oracles::latent_oracle(q, m, b);
      REQUIRE(want.has_value());
      CHECK((got.latent == want->latent).all());
      CHECK(rsl::rsl_loss(q, m, {b}) == doctest::Approx(want->loss).epsilon(1e-12));
    }
  }
}

TEST_CASE("oracle agreement on larger grids") {
  Rng rng(606);
  for (int i = 0; i < 100; ++i) {
    const LogitGrid q = random_logits(6, 6, rng);
    const MaskGrid m = random_nonempty_mask(6, 6, 0.3, rng);
    const auto got = rsl::infer_latent(q, m, {0.7});
    const auto want = oracles::latent_oracle(q, m, 0.7);
    REQUIRE(want.has_value());
    CHECK((got.latent == want->latent).all());
  }
}

TEST_CASE("gradient matches central differences away from flip boundaries") {
  Rng rng(707);
  const rsl::RslConfig cfg{0.7};
  int checked = 0;
  for (int trial = 0; trial < 20 && checked < 60; ++trial) {
    LogitGrid q = random_logits(6, 6, rng);
    const MaskGrid m = random_nonempty_mask(6, 6, 0.35, rng);
    const Plane grad = rsl::rsl_gradient(q, m, cfg);
    const MaskGrid latent0 = rsl::infer_latent(q, m, cfg).latent;
    for (int k = 0; k < 5; ++k) {
      const Eigen::Index idx = rng.uniform_int(0, static_cast<int>(q.size()) - 1);
      const double h = 1e-5;
      const double saved = q.data()[idx];
      q.data()[idx] = saved + h;
      const bool same_hi = (rsl::infer_latent(q, m, cfg).latent == latent0).all();
      const double hi = rsl::rsl_loss(q, m, cfg);
      q.data()[idx] = saved - h;
      const bool same_lo = (rsl::infer_latent(q, m, cfg).latent == latent0).all();
      const double lo = rsl::rsl_loss(q, m, cfg);
      q.data()[idx] = saved;
      if (!same_hi || !same_lo) continue;  // flip boundary, derivative kinks
      const double fd = (hi - lo) / (2 * h);
      const double an = grad.data()[idx];
      const double rel = std::abs(fd - an) / std::max(1e-8, std::abs(an));
      CHECK(rel < 1e-4);
      ++checked;
    }
  }
  CHECK(checked >= 50);
}

TEST_CASE("gradient formula at a fixed point") {
  // pixel with logit 0 and latent 1 contributes (0.5 - 1)/n
  LogitGrid q(1, 2);
  q(0, 0) = 0.0;
  q(0, 1) = 5.0;
  MaskGrid m(1, 2);
  m(0, 0) = true;
  m(0, 1) = true;
  const Plane g = rsl::rsl_gradient(q, m, {1.0});
  CHECK(g(0, 0) == doctest::Approx(-0.5 / 2.0));
}

TEST_CASE("input validation") {
  const LogitGrid q = grid2x2(1, -1, 1, -1);
  MaskGrid m = MaskGrid::Constant(2, 2, false);
  CHECK_THROWS(rsl::infer_latent(q, m, {0.7}));  // empty mask
  m(0, 0) = true;
  CHECK_THROWS(rsl::infer_latent(q, m, {0.0}));   // b out of range
  CHECK_THROWS(rsl::infer_latent(q, m, {1.5}));   // b out of range
  MaskGrid wrong = MaskGrid::Constant(3, 2, true);
  CHECK_THROWS(rsl::infer_latent(q, wrong, {0.7}));
  CHECK_THROWS(rsl::cross_entropy(q, wrong));
}

TEST_CASE("solver is fast enough for training batches") {
  Rng rng(808);
  std::vector<LogitGrid> qs;
  std::vector<MaskGrid> ms;
  for (int i = 0; i < 32; ++i) {
    qs.push_back(random_logits(48, 48, rng));
    ms.push_back(random_nonempty_mask(48, 48, 0.3, rng));
  }
  const auto t0 = std::chrono::steady_clock::now();
  double sink = 0.0;
  for (int i = 0; i < 32; ++i) {
    sink += rsl::infer_latent(qs[static_cast<std::size_t>(i)],
                              ms[static_cast<std::size_t>(i)], {0.7})
                .bias;
  }
  const double dt = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
  CHECK(dt < 0.35);
  CHECK(sink >= 0.0);
}
