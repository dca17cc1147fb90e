// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

// Superpositional f0 stylization: phrase register (level and range lines),
// local third-order accent shapes and their register deviation.

#pragma once

#include <optional>

#include "prosync/types.hpp"

namespace prosync::styl {

struct RegisterParams {
  double window = 0.050;
  double step = 0.010;
  double base_pct = 10.0;
  double top_pct = 90.0;
};

/// Level (midline) and range regression lines over time normalized to [0, 1]
/// on [t_start, t_end].
struct RegisterFit {
  double lev_c0 = 0.0, lev_c1 = 0.0;
  double rng_c0 = 0.0, rng_c1 = 0.0;
  double base_c0 = 0.0, base_c1 = 0.0;
  double top_c0 = 0.0, top_c1 = 0.0;
  double t_start = 0.0, t_end = 0.0;
  /// Fitted lines sampled at the segment's sample times.
  Vector midline_points;
  Vector rangeline_points;

  double normalized(double t) const { return (t - t_start) / (t_end - t_start); }
  double midline_at(double t) const { return lev_c0 + lev_c1 * normalized(t); }
  double rangeline_at(double t) const { return rng_c0 + rng_c1 * normalized(t); }
};

/// Register stylization of a semitone segment. Windowed medians (bottom
/// decile, all, top decile) yield base-, mid- and topline sequences; lines are
/// least-squares fits over normalized time and the range line is fit to the
/// pointwise top-minus-base distances. Missing when fewer than two windows
/// fit into the segment.
std::optional<RegisterFit> fit_register(const SampledTrack& segment,
                                        const RegisterParams& params = {});

/// Semitone contour minus the phrase midline, sample by sample.
SampledTrack subtract_midline(const SampledTrack& contour, const RegisterFit& phrase);

/// Cubic fit s0 + s1 t + s2 t^2 + s3 t^3 to the residual inside a window of
/// `window` seconds centered on `nucleus_time`, with t in [-1, 1] across the
/// nominal window. The window is clipped to the residual's extent; missing
/// with fewer than 4 samples.
std::optional<Eigen::Vector4d> fit_accent_poly(const SampledTrack& residual, double nucleus_time,
                                               double window = 0.300);

struct Gestalt {
  double lev = 0.0;
  double rng = 0.0;
};

/// RMS deviation between local and phrase mid-/range lines at `times`.
Gestalt gestalt(const RegisterFit& local, const RegisterFit& phrase, const Vector& times);

struct AccentShape {
  std::optional<Eigen::Vector4d> poly;
  std::optional<RegisterFit> local;
  std::optional<Gestalt> gst;
};

/// Full local stylization around one nucleus: polynomial on the residual,
/// local register on the contour, and the Gestalt deviation from `phrase`.
/// `contour` is the semitone contour of the enclosing phrase.
AccentShape stylize_accent(const SampledTrack& contour, const RegisterFit& phrase,
                           double nucleus_time, double window = 0.300,
                           const RegisterParams& params = {});

}  // namespace prosync::styl
