// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

// Per-session analysis: signal preprocessing, phrase and syllable structure,
// stylization and accent classification, reduced to one feature row per turn.

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "prosync/features.hpp"
#include "prosync/ingest.hpp"
#include "prosync/structure.hpp"
#include "prosync/styl.hpp"

namespace prosync::pipeline {

struct AnalysisParams {
  double pause = structure::kPauseThreshold;
  structure::NucleusParams nucleus;
  structure::AccentParams accent;
  double accent_window = 0.300;
  styl::RegisterParams reg;
  double rhythm_band = 1.0;
  double rhythm_cutoff = 10.0;
};

/// One detected syllable nucleus and its classification.
struct NucleusRecord {
  std::string speaker;
  double time = 0.0;
  bool candidate = false;  // word-initial
  bool accented = false;
};

struct SessionResult {
  std::vector<features::TurnFeatures> turns;  // in turn index order
  std::vector<NucleusRecord> nuclei;          // per speaker, in time order
  std::vector<std::string> warnings;
};

/// Preprocessed contours of one channel.
struct ChannelContours {
  SampledTrack hz;        // smoothed Hz, valid on originally voiced samples
  SampledTrack semitone;  // smoothed, interpolated, relative to the speaker base
  double base = 0.0;      // Hz
};

/// Outlier removal, gap interpolation and smoothing of a raw f0 track, then
/// semitone conversion against the speaker base. Throws without voiced
/// samples.
ChannelContours preprocess_f0(const SampledTrack& f0);

SessionResult analyze_session(const ingest::SessionData& data, const AnalysisParams& params = {});

/// `<time>\t<flag>` rows of one speaker's nuclei; flag 1 marks accents.
void write_nucleus_dump(std::ostream& os, std::span<const NucleusRecord> nuclei,
                        const std::string& speaker);

}  // namespace prosync::pipeline
