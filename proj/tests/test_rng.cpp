#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "segarena/rng.hpp"

using segarena::Rng;

TEST_CASE("same seed gives the same stream") {
  Rng a(1234, 7), b(1234, 7);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
}

TEST_CASE("different streams diverge") {
  Rng a(1234, 1), b(1234, 2);
  int same = 0;
  for (int i = 0; i < 100; ++i) {
    if (a.next_u32() == b.next_u32()) ++same;
  }
  CHECK(same < 3);
}

TEST_CASE("state round trip resumes the stream") {
  Rng a(99, 3);
  a.uniform();
  a.normal();
  Rng b = Rng::from_state(a.state(), a.increment());
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform() == b.uniform());
  }
}

TEST_CASE("uniform lands in [0,1) with a sane mean") {
  Rng rng(5);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("uniform_int covers the inclusive range uniformly") {
  Rng rng(17);
  int counts[5] = {0, 0, 0, 0, 0};
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const int v = rng.uniform_int(3, 7);
    REQUIRE(v >= 3);
    REQUIRE(v <= 7);
    counts[v - 3]++;
  }
  for (const int c : counts) {
    CHECK(std::abs(c - n / 5) < 5 * std::sqrt(n / 5.0));
  }
}

TEST_CASE("normal has roughly unit variance") {
  Rng rng(23);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}
