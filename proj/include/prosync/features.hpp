// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

// The 37-slot prosodic turn vector: general energy/f0 statistics, phrase
// register, accent shapes and rhythm weights.

#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prosync/styl.hpp"
#include "prosync/types.hpp"

namespace prosync::features {

inline constexpr int kFeatureCount = 37;

/// Column names in canonical order, e.g. "gnl_en.max", "acc.rng.c1.L".
const std::array<std::string, kFeatureCount>& feature_names();
/// Feature set of each column: gnl_en, gnl_f0, phrase, acc, rhy_en, rhy_f0.
const std::array<std::string, kFeatureCount>& feature_sets();
/// Index of a feature by name; throws for unknown names.
int feature_index(std::string_view name);
/// True for phrase/acc features with a first/last position suffix.
bool has_position(int index);

struct TurnFeatures {
  std::string session;
  std::string speaker;
  std::string task;
  int index = 0;
  Role role = Role::kDescriber;
  Gender gender = Gender::kFemale;
  double start = 0.0;
  double end = 0.0;
  std::array<Nullable, kFeatureCount> values;

  Nullable& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
  const Nullable& operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
};

struct GnlStats {
  Nullable max, med, sd;
};

/// Maximum, median and population standard deviation of the valid samples
/// whose time lies in [t0, t1]; all null without valid samples.
GnlStats gnl_stats(const SampledTrack& track, double t0, double t1);

/// Share of the modulation spectrum below `cutoff` Hz that falls in the band
/// [rate - band, rate + band]; computed on the mean-removed valid samples.
/// Null when fewer than two samples, rate >= cutoff, rate <= 0 or the
/// spectrum is flat zero.
Nullable rhythm_weight(const SampledTrack& contour, double syllable_rate, double band = 1.0,
                       double cutoff = 10.0);

struct RhythmFeatures {
  Nullable rate;
  Nullable prop_en;
  Nullable prop_f0;
};

/// Syllable rate (nuclei per second of turn) and rhythm weights of the energy
/// and f0 contours restricted to [t0, t1].
RhythmFeatures rhythm_features(const SampledTrack& energy, const SampledTrack& f0,
                               std::size_t nucleus_count, double t0, double t1,
                               double band = 1.0, double cutoff = 10.0);

/// Upstream results for one turn, in time order.
struct TurnAnalysis {
  GnlStats energy;
  GnlStats f0;
  std::vector<std::optional<styl::RegisterFit>> phrases;  // one per IPU
  std::vector<styl::AccentShape> accents;                 // one per accented syllable
  RhythmFeatures rhythm;
};

/// Fills the 37 slots; phrase F/L come from the first/last IPU, acc F/L from
/// the first/last accent. Missing upstream values stay null.
void assemble_turn_features(const TurnAnalysis& analysis, TurnFeatures& out);

/// CSV with identity columns followed by the 37 features; nulls are empty.
void write_features_csv(std::ostream& os, std::span<const TurnFeatures> rows);
std::vector<TurnFeatures> read_features_csv(std::istream& is);

/// Shortest round-tripping decimal representation.
std::string format_number(double v);

}  // namespace prosync::features
