// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

// Synthetic dyads with controllable entrainment: annotation, 100 Hz f0 tracks
// and 16 kHz amplitude-modulated carriers that the analysis pipeline can
// read back, together with the generating per-turn values.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prosync/ingest.hpp"

namespace prosync::synthgen {

enum class Mode { kNone, kProximity, kSynchrony, kDisentrain };
const char* mode_name(Mode m);
Mode parse_mode(const std::string& s);

/// Turn-level quantities the generator draws and can entrain.
enum class Target { kF0Level, kF0Range, kEnergy, kRate };
inline constexpr int kTargetCount = 4;
const char* target_name(Target t);
Target parse_target(const std::string& s);

struct SynthConfig {
  std::uint64_t seed = 1;
  int sessions = 1;
  int n_turns = 120;
  int turns_per_task = 40;

  // timing, seconds
  double turn_min = 1.5;
  double turn_max = 4.0;
  double pause_min = 0.2;
  double pause_max = 0.8;
  double same_speaker_prob = 0.1;
  double word_pause_prob = 0.15;
  double word_pause = 0.3;
  int max_word_syllables = 3;
  double short_word_prob = 0.2;

  std::array<Gender, 2> genders = {Gender::kFemale, Gender::kMale};

  // f0 (semitones re 100 Hz unless stated)
  double female_hz = 200.0;
  double male_hz = 110.0;
  double level_sd_speaker = 2.0;
  double level_sd_turn = 2.0;
  double range_mean = 6.0;
  double range_sd_speaker = 1.0;
  double range_sd_turn = 1.0;
  double declination = 2.0;
  double accent_prob = 0.3;
  double accent_height = 3.0;
  double jitter = 0.05;

  // energy (dB re full scale) and syllable rate (Hz)
  double energy_db_mean = -20.0;
  double energy_db_sd_speaker = 2.0;
  double energy_db_sd_turn = 3.0;
  double rate_mean = 4.5;
  double rate_sd_speaker = 0.3;
  double rate_sd_turn = 0.6;

  // entrainment
  Mode mode = Mode::kNone;
  double gain = 0.0;
  double entrainment_rate = 0.5;  // share of eligible turns that respond
  double disentrain_shift = 2.0;  // push away from the initiator, in turn SDs
  std::vector<Target> targets = {Target::kF0Level};
  std::optional<Role> responder_role;
  std::optional<Gender> responder_gender;

  // audio
  double audio_rate = 16000.0;
  double carrier = 1000.0;
  double noise_db = -40.0;
  bool signals = true;  // false leaves the channels empty (truth only)

  /// Throws ValidationError when a field is out of range.
  void validate() const;
};

/// Generating values of one turn, in turn index order.
struct TurnTruth {
  std::string speaker;
  double start = 0.0;
  double end = 0.0;
  std::array<double, kTargetCount> values{};  // level, range, energy, rate
  double realized_rate = 0.0;                 // syllables / turn duration
  int syllables = 0;
  bool entrained = false;
};

struct SynthSession {
  ingest::SessionData data;
  std::vector<TurnTruth> truth;
};

/// Session `index` of the corpus described by `cfg`; deterministic given
/// the seed and index.
SynthSession generate_dyad(const SynthConfig& cfg, int index = 0);

/// Writes every session in the ingest formats plus `manifest.tsv` and
/// per-session `truth_<id>.csv`; returns the manifest path.
std::filesystem::path write_corpus(const SynthConfig& cfg, const std::filesystem::path& dir);

void write_truth_csv(std::ostream& os, std::span<const TurnTruth> truth);

}  // namespace prosync::synthgen
