#include <cmath>

#include "doctest.h"
#include "loolab/rng.hpp"

using namespace loolab;

TEST_CASE("counter rng is a pure function of seed, stream and position") {
  CounterRng a(42), b(42);
  for (int j = 0; j < 100; ++j) CHECK(a.next_u64() == b.next_u64());

  CounterRng c(42, 1);
  CounterRng d(42);
  int same = 0;
  for (int j = 0; j < 100; ++j) same += c.next_u64() == d.next_u64();
  CHECK(same == 0);

  CHECK(uniform_at(7, 123) == uniform_at(7, 123));
  CHECK(uniform_at(7, 123) != uniform_at(7, 124));
  CHECK(CounterRng(9).split(3).stream() == CounterRng(9).split(3).stream());
  CHECK(CounterRng(9).split(3).stream() != CounterRng(9).split(4).stream());
}

TEST_CASE("draws have the right first two moments") {
  CounterRng rng(2024);
  const int N = 200000;
  double su = 0, sn = 0, sn2 = 0, se = 0, sg = 0, sb = 0;
  for (int j = 0; j < N; ++j) {
    su += rng.uniform();
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    se += rng.exponential();
    sg += rng.gamma(0.5);
    sb += rng.beta(2.0, 3.0);
  }
  CHECK(su / N == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / N) < 0.01);
  CHECK(sn2 / N == doctest::Approx(1.0).epsilon(0.01));
  CHECK(se / N == doctest::Approx(1.0).epsilon(0.01));
  CHECK(sg / N == doctest::Approx(0.5).epsilon(0.02));
  CHECK(sb / N == doctest::Approx(0.4).epsilon(0.01));
}

TEST_CASE("uniform stays in [0, 1)") {
  CounterRng rng(1);
  for (int j = 0; j < 100000; ++j) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}
