// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <vector>

#include "doctest.h"
#include "prosync/numeric.hpp"

using namespace prosync;

TEST_CASE("percentile follows linear interpolation between order statistics") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(num::percentile(v, 25) == doctest::Approx(1.75));
  CHECK(num::percentile(v, 0) == 1.0);
  CHECK(num::percentile(v, 100) == 4.0);
  CHECK(num::median(v) == 2.5);
  // values checked against numpy.percentile (default method)
  const std::vector<double> w{3, 1, 4, 1, 5, 9, 2, 6};
  CHECK(num::percentile(w, 82) == doctest::Approx(5.74).epsilon(1e-12));
}

TEST_CASE("population sd of [1,2,3,4] is sqrt(1.25)") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(num::population_sd(v) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
}

TEST_CASE("student t tail probabilities") {
  // reference values from scipy.stats.t.sf
  CHECK(num::student_t_two_sided_p(2.0, 10) == doctest::Approx(0.07338803477074039).epsilon(1e-10));
  CHECK(num::student_t_two_sided_p(-0.5, 3) == doctest::Approx(0.651447964848151).epsilon(1e-10));
  CHECK(num::student_t_two_sided_p(5.0, 200) == doctest::Approx(1.250198127771539e-06).epsilon(1e-8));
  CHECK(num::normal_cdf(-1.96) == doctest::Approx(0.024997895148220435).epsilon(1e-12));
}

TEST_CASE("line and polynomial fits recover exact inputs") {
  Vector x = Vector::LinSpaced(7, 0.0, 1.0);
  Vector y = (2.0 - 3.0 * x.array()).matrix();
  const auto l = num::fit_line(x, y);
  CHECK(l.c0 == doctest::Approx(2.0));
  CHECK(l.c1 == doctest::Approx(-3.0));
  Vector y3 = (x.array().cube() - 2.0 * x.array()).matrix();
  const Vector c = num::fit_polynomial(x, y3, 3);
  CHECK(c[0] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(c[1] == doctest::Approx(-2.0));
  CHECK(c[3] == doctest::Approx(1.0));
  CHECK_THROWS_AS(num::fit_line(Vector::Ones(3), y.head(3)), Error);
}

TEST_CASE("rng is seeded, bounded and forkable") {
  num::Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  num::Rng r(7);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 5000; ++i) ++counts[r.below(5)];
  for (int c : counts) CHECK(c > 850);
  CHECK(num::Rng(1).fork(3).next() != num::Rng(1).fork(4).next());
  double s = 0, s2 = 0;
  num::Rng g(3);
  for (int i = 0; i < 20000; ++i) {
    const double z = g.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / 20000) < 0.03);
  CHECK(std::abs(s2 / 20000 - 1.0) < 0.05);
}
