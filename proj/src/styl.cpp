// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include "prosync/styl.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "prosync/numeric.hpp"

namespace prosync::styl {

std::optional<RegisterFit> fit_register(const SampledTrack& segment, const RegisterParams& params) {
  const Eigen::Index n = segment.size();
  const auto width = std::max<Eigen::Index>(1, std::lround(params.window * segment.rate));
  const auto hop = std::max<Eigen::Index>(1, std::lround(params.step * segment.rate));
  if (n < 2 || width > n) return std::nullopt;

  const double t0 = segment.time_of(0), t1 = segment.time_of(n - 1);
  std::vector<double> times, base, mid, top;
  std::vector<double> buf;
  for (Eigen::Index i = 0; i + width <= n; i += hop) {
    buf.clear();
    for (Eigen::Index j = i; j < i + width; ++j)
      if (segment.valid[j]) buf.push_back(segment.values[j]);
    if (buf.empty()) continue;
    std::sort(buf.begin(), buf.end());
    const double lo = num::percentile_sorted(buf, params.base_pct);
    const double hi = num::percentile_sorted(buf, params.top_pct);
    const auto lo_end = std::upper_bound(buf.begin(), buf.end(), lo);
    const auto hi_begin = std::lower_bound(buf.begin(), buf.end(), hi);
    base.push_back(num::median(std::span<const double>(buf.data(), lo_end - buf.begin())));
    top.push_back(num::median(std::span<const double>(&*hi_begin, buf.end() - hi_begin)));
    mid.push_back(num::median(buf));
    const double center = segment.time_of(i) + 0.5 * static_cast<double>(width - 1) / segment.rate;
    times.push_back((center - t0) / (t1 - t0));
  }
  if (times.size() < 2) return std::nullopt;

  const auto as_vec = [](const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  };
  const Vector x = as_vec(times);
  const Vector b = as_vec(base), m = as_vec(mid), t = as_vec(top);
  const auto lev = num::fit_line(x, m);
  const auto rng = num::fit_line(x, t - b);
  const auto bl = num::fit_line(x, b);
  const auto tl = num::fit_line(x, t);

  RegisterFit fit;
  fit.lev_c0 = lev.c0;
  fit.lev_c1 = lev.c1;
  fit.rng_c0 = rng.c0;
  fit.rng_c1 = rng.c1;
  fit.base_c0 = bl.c0;
  fit.base_c1 = bl.c1;
  fit.top_c0 = tl.c0;
  fit.top_c1 = tl.c1;
  fit.t_start = t0;
  fit.t_end = t1;
  const Vector grid = Vector::LinSpaced(n, 0.0, 1.0);
  fit.midline_points = (lev.c0 + lev.c1 * grid.array()).matrix();
  fit.rangeline_points = (rng.c0 + rng.c1 * grid.array()).matrix();
  return fit;
}

SampledTrack subtract_midline(const SampledTrack& contour, const RegisterFit& phrase) {
  SampledTrack out = contour;
  for (Eigen::Index i = 0; i < contour.size(); ++i)
    out.values[i] -= phrase.midline_at(contour.time_of(i));
  return out;
}

std::optional<Eigen::Vector4d> fit_accent_poly(const SampledTrack& residual, double nucleus_time,
                                               double window) {
  const double half = 0.5 * window;
  const auto [first, last] = residual.index_range(nucleus_time - half, nucleus_time + half);
  std::vector<double> ts, ys;
  for (Eigen::Index i = first; i < last; ++i) {
    if (!residual.valid[i]) continue;
    ts.push_back((residual.time_of(i) - nucleus_time) / half);
    ys.push_back(residual.values[i]);
  }
  if (ts.size() < 4) return std::nullopt;
  const Eigen::Map<const Vector> x(ts.data(), static_cast<Eigen::Index>(ts.size()));
  const Eigen::Map<const Vector> y(ys.data(), static_cast<Eigen::Index>(ys.size()));
  return Eigen::Vector4d(num::fit_polynomial(x, y, 3));
}

Gestalt gestalt(const RegisterFit& local, const RegisterFit& phrase, const Vector& times) {
  if (times.size() == 0) return {};
  double lev = 0.0, rng = 0.0;
  for (double t : times) {
    const double dl = local.midline_at(t) - phrase.midline_at(t);
    const double dr = local.rangeline_at(t) - phrase.rangeline_at(t);
    lev += dl * dl;
    rng += dr * dr;
  }
  const auto n = static_cast<double>(times.size());
  return {std::sqrt(lev / n), std::sqrt(rng / n)};
}

AccentShape stylize_accent(const SampledTrack& contour, const RegisterFit& phrase,
                           double nucleus_time, double window, const RegisterParams& params) {
  AccentShape shape;
  shape.poly = fit_accent_poly(subtract_midline(contour, phrase), nucleus_time, window);
  const SampledTrack local = contour.slice(nucleus_time - 0.5 * window, nucleus_time + 0.5 * window);
  shape.local = fit_register(local, params);
  if (shape.local) {
    Vector times(local.size());
    for (Eigen::Index i = 0; i < local.size(); ++i) times[i] = local.time_of(i);
    shape.gst = gestalt(*shape.local, phrase, times);
  }
  return shape;
}

}  // namespace prosync::styl
