// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "prosync/types.hpp"

namespace prosync::num {

/// Linear-interpolation percentile (the "type 7" convention): the value at
/// position (n - 1) * pct / 100 of the sorted sample. `pct` in [0, 100].
double percentile(std::span<const double> values, double pct);
double percentile_sorted(std::span<const double> sorted, double pct);

double median(std::span<const double> values);
double mean(std::span<const double> values);
/// Population standard deviation (divides by n).
double population_sd(std::span<const double> values);

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Ordinary least-squares line y = c0 + c1 * x. Requires >= 2 distinct x.
struct Line {
  double c0 = 0.0;
  double c1 = 0.0;
  double at(double x) const { return c0 + c1 * x; }
};
Line fit_line(const Vector& x, const Vector& y);

/// Least-squares polynomial coefficients (lowest order first).
Vector fit_polynomial(const Vector& x, const Vector& y, int order);

/// Standard normal and Student-t tail probabilities.
double normal_cdf(double z);
double student_t_two_sided_p(double t, double dof);

/// Splittable, platform-independent random stream. Bounded draws are
/// unbiased and do not depend on the standard library's distributions, so
/// seeded output is identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  /// Uniform integer in [0, n). n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Uniform real in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Independent child stream keyed by `stream`.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace prosync::num
