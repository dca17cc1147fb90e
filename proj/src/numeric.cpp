// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include "prosync/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace prosync {

std::pair<Eigen::Index, Eigen::Index> SampledTrack::index_range(double t0, double t1) const {
  const double eps = 1e-9;
  auto first = static_cast<Eigen::Index>(std::ceil((t0 - start) * rate - eps));
  auto last = static_cast<Eigen::Index>(std::floor((t1 - start) * rate + eps)) + 1;
  first = std::clamp<Eigen::Index>(first, 0, size());
  last = std::clamp<Eigen::Index>(last, first, size());
  return {first, last};
}

SampledTrack SampledTrack::slice(double t0, double t1) const {
  auto [first, last] = index_range(t0, t1);
  SampledTrack out;
  out.values = values.segment(first, last - first);
  out.valid = valid.segment(first, last - first);
  out.rate = rate;
  out.start = time_of(first);
  out.unit = unit;
  return out;
}

SampledTrack SampledTrack::all_valid(Vector values, double rate, Unit unit, double start) {
  SampledTrack t;
  t.valid = Mask::Constant(values.size(), true);
  t.values = std::move(values);
  t.rate = rate;
  t.unit = unit;
  t.start = start;
  return t;
}

namespace num {

double percentile_sorted(std::span<const double> sorted, double pct) {
  if (sorted.empty()) throw Error("percentile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * pct / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || lo == hi) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double percentile(std::span<const double> values, double pct) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return percentile_sorted(sorted, pct);
}

double median(std::span<const double> values) { return percentile(values, 50.0); }

double mean(std::span<const double> values) {
  if (values.empty()) throw Error("mean of empty sample");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double population_sd(std::span<const double> values) {
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

Line fit_line(const Vector& x, const Vector& y) {
  const double mx = x.mean();
  const double my = y.mean();
  const double sxx = (x.array() - mx).square().sum();
  if (!(sxx > 0.0)) throw Error("line fit needs two distinct abscissae");
  const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
  Line l;
  l.c1 = sxy / sxx;
  l.c0 = my - l.c1 * mx;
  return l;
}

Vector fit_polynomial(const Vector& x, const Vector& y, int order) {
  Matrix design(x.size(), order + 1);
  design.col(0).setOnes();
  for (int k = 1; k <= order; ++k) design.col(k) = design.col(k - 1).cwiseProduct(x);
  return design.colPivHouseholderQr().solve(y);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

namespace {

// Continued fraction for the regularized incomplete beta function.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                     b * std::log1p(-x);
  const double bt = std::exp(lbt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
  return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_two_sided_p(double t, double dof) {
  if (!std::isfinite(t)) return 0.0;
  const double x = dof / (dof + t * t);
  return std::clamp(incomplete_beta(0.5 * dof, 0.5, x), 0.0, 1.0);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw Error("Rng::below(0)");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t r;
  do {
    r = next();
  } while (r >= limit);
  return r % n;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

Rng Rng::fork(std::uint64_t stream) const { return Rng(mix_seed(state_, stream)); }

}  // namespace num
}  // namespace prosync
