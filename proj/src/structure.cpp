// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include "prosync/structure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "prosync/numeric.hpp"

namespace prosync::structure {

namespace {

constexpr double kEps = 1e-9;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::vector<Ipu> segment_turn(const ingest::Turn& turn, std::span<const ingest::Word> words,
                              double pause) {
  if (words.empty()) return {{turn.speaker, turn.start, turn.end, turn.index}};
  std::vector<Ipu> out;
  Ipu cur{turn.speaker, words.front().start, words.front().end, turn.index};
  for (std::size_t i = 1; i < words.size(); ++i) {
    if (words[i].start - cur.end >= pause - kEps) {
      out.push_back(cur);
      cur.start = words[i].start;
    }
    cur.end = std::max(cur.end, words[i].end);
  }
  out.push_back(cur);
  return out;
}

std::vector<Ipu> segment_ipus(const ingest::DialogAnnotation& ann, double pause) {
  std::vector<Ipu> out;
  for (const auto& turn : ann.turns()) {
    const auto words = ann.words_in(turn);
    const auto ipus = segment_turn(turn, words, pause);
    out.insert(out.end(), ipus.begin(), ipus.end());
  }
  return out;
}

double window_rms(const Waveform& signal, double t, double length) {
  const auto n = static_cast<Eigen::Index>(signal.samples.size());
  const auto width = std::max<Eigen::Index>(1, std::lround(length * signal.rate));
  const Eigen::Index center = std::lround(t * signal.rate);
  const Eigen::Index first = center - width / 2;
  const Eigen::Index lo = std::clamp<Eigen::Index>(first, 0, n);
  const Eigen::Index hi = std::clamp<Eigen::Index>(first + width, 0, n);
  if (hi <= lo) return 0.0;
  return std::sqrt(signal.samples.segment(lo, hi - lo).squaredNorm() / static_cast<double>(width));
}

std::vector<SyllableNucleus> detect_syllable_nuclei(const Waveform& bandpassed, const Ipu& ipu,
                                                    const NucleusParams& params) {
  std::vector<double> times, a, r;
  for (int k = 0;; ++k) {
    const double t = ipu.start + k * params.step;
    if (t > ipu.end + kEps) break;
    times.push_back(t);
    a.push_back(window_rms(bandpassed, t, params.analysis_window));
    r.push_back(window_rms(bandpassed, t, params.reference_window));
  }
  std::vector<SyllableNucleus> out;
  if (times.empty()) return out;
  const double floor = params.max_fraction * *std::max_element(a.begin(), a.end());
  std::size_t best = 0;
  bool in_run = false;
  for (std::size_t i = 0; i <= times.size(); ++i) {
    const bool ok = i < times.size() && a[i] > params.ratio * r[i] && a[i] > floor;
    if (ok) {
      if (!in_run || a[i] > a[best]) best = i;
      in_run = true;
    } else if (in_run) {
      out.push_back({times[best], a[best] / r[best]});
      in_run = false;
    }
  }
  return out;
}

std::vector<SyllableNucleus> detect_syllable_nuclei(const Waveform& bandpassed,
                                                    std::span<const Ipu> ipus,
                                                    const NucleusParams& params) {
  std::vector<SyllableNucleus> out;
  for (const auto& ipu : ipus) {
    const auto nuclei = detect_syllable_nuclei(bandpassed, ipu, params);
    out.insert(out.end(), nuclei.begin(), nuclei.end());
  }
  return out;
}

Matrix impute_column_means(const Matrix& features) {
  Matrix out = features;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      if (!std::isnan(out(r, c))) {
        sum += out(r, c);
        ++count;
      }
    }
    const double fill = count > 0 ? sum / count : 0.0;
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      if (std::isnan(out(r, c))) out(r, c) = fill;
  }
  return out;
}

double mean_cluster_silhouette(std::span<const double> values, std::span<const int> labels) {
  if (values.size() != labels.size()) throw Error("silhouette: size mismatch");
  // 1-D mean absolute distances through sorted prefix sums, O(n log n).
  std::array<std::vector<double>, 2> sorted, prefix;
  for (std::size_t i = 0; i < values.size(); ++i) sorted[labels[i] != 0].push_back(values[i]);
  for (int c = 0; c < 2; ++c) {
    std::sort(sorted[c].begin(), sorted[c].end());
    prefix[c].assign(sorted[c].size() + 1, 0.0);
    for (std::size_t i = 0; i < sorted[c].size(); ++i)
      prefix[c][i + 1] = prefix[c][i] + sorted[c][i];
  }
  const auto total_distance = [&](int c, double x) {
    const auto& s = sorted[c];
    const auto& p = prefix[c];
    const auto k = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), x) - s.begin());
    return x * k - p[k] + (p.back() - p[k]) - x * (s.size() - k);
  };
  double cluster_mean[2] = {0.0, 0.0};
  for (int c = 0; c < 2; ++c) {
    const auto n_own = sorted[c].size();
    const auto n_other = sorted[1 - c].size();
    if (n_own == 0) continue;
    double sum = 0.0;
    if (n_own > 1 && n_other > 0) {
      for (double x : sorted[c]) {
        const double a = total_distance(c, x) / static_cast<double>(n_own - 1);
        const double b = total_distance(1 - c, x) / static_cast<double>(n_other);
        const double m = std::max(a, b);
        if (m > 0.0) sum += (b - a) / m;
      }
    }
    cluster_mean[c] = sum / static_cast<double>(n_own);
  }
  return 0.5 * (cluster_mean[0] + cluster_mean[1]);
}

AccentModel bootstrap_accent_model(const Matrix& features, std::span<const WordSyllables> words,
                                   const AccentParams& params) {
  std::vector<Eigen::Index> seed0, seed1;
  for (const auto& w : words) {
    if (w.syllables.empty()) continue;
    if (w.duration > params.long_word) seed1.push_back(w.syllables.front());
    if (w.duration < params.short_word)
      seed0.insert(seed0.end(), w.syllables.begin(), w.syllables.end());
  }
  if (seed0.empty()) throw Error("accent bootstrap: no unaccented seed syllables");
  if (seed1.empty()) throw Error("accent bootstrap: no accented seed syllables");

  const Matrix x = impute_column_means(features);
  AccentModel model;
  model.percentile = params.percentile;
  model.centroid0 = x(seed0, Eigen::all).colwise().mean().transpose();
  model.centroid1 = x(seed1, Eigen::all).colwise().mean().transpose();
  model.weights.resize(x.cols());
  std::vector<double> values;
  std::vector<int> labels(seed0.size(), 0);
  labels.resize(seed0.size() + seed1.size(), 1);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    values.clear();
    for (auto r : seed0) values.push_back(x(r, c));
    for (auto r : seed1) values.push_back(x(r, c));
    model.weights[c] = std::max(0.0, mean_cluster_silhouette(values, labels));
  }
  if (model.weights.maxCoeff() <= 0.0) throw Error("accent bootstrap: every feature weight is zero");
  return model;
}

Vector accent_quotients(const AccentModel& model, const Matrix& candidates) {
  const Matrix x = impute_column_means(candidates);
  Vector q(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Vector row = x.row(r).transpose();
    const double d0 =
        std::sqrt(model.weights.dot((row - model.centroid0).cwiseAbs2()));
    const double d1 =
        std::sqrt(model.weights.dot((row - model.centroid1).cwiseAbs2()));
    q[r] = d1 == 0.0 ? std::numeric_limits<double>::infinity() : d0 / d1;
  }
  return q;
}

std::vector<bool> classify_accents(const AccentModel& model, const Matrix& candidates) {
  const Vector q = accent_quotients(model, candidates);
  std::vector<bool> out(static_cast<std::size_t>(q.size()), false);
  if (q.size() == 0) return out;
  double threshold = num::percentile(num::as_span(q), model.percentile);
  if (std::isnan(threshold)) threshold = std::numeric_limits<double>::infinity();  // inf - inf
  for (Eigen::Index i = 0; i < q.size(); ++i) out[i] = std::isinf(q[i]) || q[i] > threshold;
  return out;
}

Eigen::Matrix<double, kAccentFeatureCount, 1> syllable_features(const SampledTrack& contour,
                                                               const styl::RegisterFit& phrase,
                                                               double nucleus_time,
                                                               double duration_z, double window) {
  Eigen::Matrix<double, kAccentFeatureCount, 1> f;
  f.setConstant(kNaN);
  const auto shape = styl::stylize_accent(contour, phrase, nucleus_time, window);
  if (shape.poly) f.head<4>() = *shape.poly;
  if (shape.local) f.segment<4>(4) << shape.local->lev_c0, shape.local->lev_c1,
      shape.local->rng_c0, shape.local->rng_c1;
  if (shape.gst) f.segment<2>(8) << shape.gst->lev, shape.gst->rng;
  f[10] = duration_z;
  return f;
}

std::vector<double> inter_nucleus_durations(std::span<const SyllableNucleus> nuclei) {
  const std::size_t n = nuclei.size();
  std::vector<double> out(n, kNaN);
  if (n < 2) return out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      out[i] = nuclei[1].time - nuclei[0].time;
    } else if (i + 1 == n) {
      out[i] = nuclei[i].time - nuclei[i - 1].time;
    } else {
      out[i] = 0.5 * (nuclei[i + 1].time - nuclei[i - 1].time);
    }
  }
  return out;
}

}  // namespace prosync::structure
