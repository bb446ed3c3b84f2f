#include <doctest.h>

#include <algorithm>
#include <vector>

#include "pism/rng.hpp"

TEST_CASE("rng streams are deterministic and bounded") {
  pism::Rng a(123), b(123), c(124);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_diff = any_diff || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff);

  pism::Rng r(7);
  for (int i = 0; i < 10000; ++i) {
    const double d = r.next_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
    CHECK(r.below(17) < 17);
  }
}

TEST_CASE("normal draws have sane moments") {
  pism::Rng r(99);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(mean == doctest::Approx(0.0).epsilon(0.02));
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("shuffle permutes deterministically") {
  std::vector<int> v1{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> v2 = v1;
  pism::Rng a(5), b(5);
  a.shuffle(v1);
  b.shuffle(v2);
  CHECK(v1 == v2);
  std::vector<int> sorted = v1;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
}
