// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

// Prosodic structure: inter-pausal units, syllable nuclei and the bootstrapped
// nearest-centroid pitch accent classifier.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "prosync/ingest.hpp"
#include "prosync/styl.hpp"
#include "prosync/types.hpp"

namespace prosync::structure {

struct Ipu {
  std::string speaker;
  double start = 0.0;
  double end = 0.0;
  int turn_index = 0;
};

inline constexpr double kPauseThreshold = 0.100;

/// Splits each turn at word gaps of at least `pause` seconds. A turn without
/// words becomes a single IPU.
std::vector<Ipu> segment_turn(const ingest::Turn& turn, std::span<const ingest::Word> words,
                              double pause = kPauseThreshold);
std::vector<Ipu> segment_ipus(const ingest::DialogAnnotation& ann, double pause = kPauseThreshold);

struct NucleusParams {
  double analysis_window = 0.05;   // w_a
  double reference_window = 0.11;  // w_r
  double step = 0.05;
  double ratio = 1.1;       // v
  double max_fraction = 0.1;  // x
};

struct SyllableNucleus {
  double time = 0.0;
  double energy_ratio = 0.0;  // RMS(w_a) / RMS(w_r)
};

/// RMS of `signal` in a window of `length` seconds centered on `t`, with
/// zeros outside the signal.
double window_rms(const Waveform& signal, double t, double length);

/// Energy-ratio nucleus detection on a band-passed signal. Steps inside each
/// IPU qualify when RMS(w_a) > v * RMS(w_r) and RMS(w_a) > x * max RMS(w_a)
/// of the IPU; each run of qualifying steps yields one nucleus at its
/// strongest step.
std::vector<SyllableNucleus> detect_syllable_nuclei(const Waveform& bandpassed, const Ipu& ipu,
                                                    const NucleusParams& params = {});
std::vector<SyllableNucleus> detect_syllable_nuclei(const Waveform& bandpassed,
                                                    std::span<const Ipu> ipus,
                                                    const NucleusParams& params = {});

// Accent classifier -----------------------------------------------------------------

struct AccentParams {
  double long_word = 0.6;    // t_a
  double short_word = 0.15;  // t_na
  double percentile = 82.0;  // p
};

/// Rows of a candidate feature matrix (one row per syllable) grouped by word.
struct WordSyllables {
  double duration = 0.0;
  std::vector<Eigen::Index> syllables;  // in time order; front() is word-initial
};

struct AccentModel {
  Vector centroid0;
  Vector centroid1;
  Vector weights;
  double percentile = 82.0;
};

/// Replaces NaN entries with the column mean of the non-NaN entries (0 if a
/// column has none).
Matrix impute_column_means(const Matrix& features);

/// Mean cluster silhouette of a two-cluster labelling of scalar values:
/// per-point coefficients averaged within each cluster, then across the two.
double mean_cluster_silhouette(std::span<const double> values, std::span<const int> labels);

/// Seeds class 1 with first syllables of words longer than `long_word` and
/// class 0 with all syllables of words shorter than `short_word`; centroids
/// are per-feature means, weights the clipped per-feature silhouettes.
/// Throws when a seed class is empty or every weight is zero.
AccentModel bootstrap_accent_model(const Matrix& features, std::span<const WordSyllables> words,
                                   const AccentParams& params = {});

/// Distance quotient d0 / d1 per row (+inf when d1 == 0).
Vector accent_quotients(const AccentModel& model, const Matrix& candidates);

/// Rows whose quotient exceeds the model percentile of all quotients are
/// accented; ties at the threshold stay unaccented; infinite quotients are
/// always accented.
std::vector<bool> classify_accents(const AccentModel& model, const Matrix& candidates);

/// Candidate feature layout: 4 polynomial coefficients, local register
/// (lev c0/c1, rng c0/c1), Gestalt (lev, rng) and a duration z-score.
inline constexpr int kAccentFeatureCount = 11;

/// Stylization features of one syllable; NaN where a part is missing.
Eigen::Matrix<double, kAccentFeatureCount, 1> syllable_features(
    const SampledTrack& contour, const styl::RegisterFit& phrase, double nucleus_time,
    double duration_z, double window = 0.300);

/// Mean distance to the neighbouring nuclei of the same IPU; NaN for a lone
/// nucleus.
std::vector<double> inter_nucleus_durations(std::span<const SyllableNucleus> nuclei);

}  // namespace prosync::structure
