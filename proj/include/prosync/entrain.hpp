// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

// Directed turn pairing, proximity/synchrony distances and entrainment
// profiles.

#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "prosync/features.hpp"
#include "prosync/numeric.hpp"

namespace prosync::entrain {

enum class Condition { kAdjacent, kNonAdjacent, kSameDialog, kDifferentDialog };
const char* condition_name(Condition c);

enum class Measure { kProximity, kSynchrony };
const char* measure_name(Measure m);

/// Initiator and responder are row indices into the corpus feature table.
struct TurnPair {
  Condition condition = Condition::kAdjacent;
  std::size_t initiator = 0;
  std::size_t responder = 0;
};

struct PairingParams {
  double min_inter_onset = 15.0;
};

/// Rows grouped by session, each group in turn order. Row order inside the
/// table is otherwise irrelevant.
std::vector<std::vector<std::size_t>> group_sessions(std::span<const features::TurnFeatures> rows);

/// Adjacent pairs (immediately preceding turn, other speaker, same task) and
/// at most one non-adjacent pair per responder (earlier other-speaker turn of
/// the same task at least `min_inter_onset` seconds before, drawn uniformly,
/// preferring initiators not drawn before).
std::vector<TurnPair> pair_local(std::span<const features::TurnFeatures> rows,
                                 std::span<const std::size_t> session, num::Rng& rng,
                                 const PairingParams& params = {});

/// Same-dialog pairs (random earlier other-speaker turn of the same task) and
/// an equal number of different-dialog pairs whose turns come from sessions
/// with disjoint speaker sets. Throws when no two such sessions exist.
std::vector<TurnPair> pair_global(std::span<const features::TurnFeatures> rows, num::Rng& rng);

using FeatureValues = std::array<Nullable, features::kFeatureCount>;

/// Mean of each feature over a speaker's turns in one session, keyed by
/// (session, speaker).
using SpeakerMeans = std::map<std::pair<std::string, std::string>, FeatureValues>;
SpeakerMeans speaker_means(std::span<const features::TurnFeatures> rows);

struct DistanceRecord {
  TurnPair pair;
  std::string session;    // responder's session
  std::string responder;  // speaker ids
  std::string initiator;
  Role role = Role::kDescriber;  // responder's role and gender
  Gender gender = Gender::kFemale;
  FeatureValues proximity;
  FeatureValues synchrony;

  const FeatureValues& values(Measure m) const {
    return m == Measure::kProximity ? proximity : synchrony;
  }
};

/// |x2 - x1| and |(x2 - m2) - (x1 - m1)|; null when a value or mean is null.
DistanceRecord distances(const TurnPair& pair, const features::TurnFeatures& initiator,
                         const features::TurnFeatures& responder, const FeatureValues& m1,
                         const FeatureValues& m2);
std::vector<DistanceRecord> distances(std::span<const TurnPair> pairs,
                                      std::span<const features::TurnFeatures> rows,
                                      const SpeakerMeans& means);

/// Profile cell: mean distance per feature, measure and condition label.
/// Labels: a, a.d_f, a.d_m, a.f_f, a.f_m, na, sd, u.
struct ProfileCell {
  std::string feature;
  Measure measure = Measure::kProximity;
  std::string condition;
  Nullable mean;
  std::size_t count = 0;
};

std::vector<std::string> profile_conditions();
std::vector<ProfileCell> build_profile(std::span<const DistanceRecord> records);

void write_profiles_csv(std::ostream& os, std::span<const ProfileCell> cells);
/// Line profiles for one feature set: features on y, mean distance on x, one
/// polyline per condition; proximity and synchrony side by side.
std::string profile_svg(std::span<const ProfileCell> cells, const std::string& feature_set);

}  // namespace prosync::entrain
