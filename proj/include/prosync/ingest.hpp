// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

// Readers and writers for the on-disk inputs: 16-bit PCM WAV, two-column f0
// tracks, tab-separated annotation tiers and the corpus manifest.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prosync/types.hpp"

namespace prosync::ingest {

struct Speaker {
  std::string id;
  Gender gender = Gender::kFemale;
};

struct Task {
  std::string id;
  double start = 0.0;
  double end = 0.0;
  std::string describer;
  double score = 0.0;
};

struct Turn {
  std::string speaker;
  std::string task;
  double start = 0.0;
  double end = 0.0;
  int index = 0;  // position in onset order within the session

  double duration() const { return end - start; }
};

struct Word {
  std::string speaker;
  double start = 0.0;
  double end = 0.0;
  std::string text;
};

/// Speakers, tasks, turns and words of one session on a shared timeline.
/// Turns are kept sorted by onset and indexed accordingly.
class DialogAnnotation {
 public:
  DialogAnnotation() = default;
  /// Sorts turns/words, assigns turn indices and enforces every invariant.
  /// Throws ValidationError on the first violation.
  DialogAnnotation(std::string session_id, std::vector<Speaker> speakers, std::vector<Task> tasks,
                   std::vector<Turn> turns, std::vector<Word> words);

  const std::string& session_id() const { return session_id_; }
  const std::vector<Speaker>& speakers() const { return speakers_; }
  const std::vector<Task>& tasks() const { return tasks_; }
  const std::vector<Turn>& turns() const { return turns_; }
  const std::vector<Word>& words() const { return words_; }

  const Speaker& speaker(std::string_view id) const;
  const Task& task(std::string_view id) const;
  Role role_of(std::string_view speaker_id, std::string_view task_id) const;
  /// Words of `turn`, in time order.
  std::vector<Word> words_in(const Turn& turn) const;

 private:
  std::string session_id_;
  std::vector<Speaker> speakers_;
  std::vector<Task> tasks_;
  std::vector<Turn> turns_;
  std::vector<Word> words_;
};

// WAV -----------------------------------------------------------------------

/// Reads linear PCM 16-bit WAV; multi-channel files yield `channel`.
Waveform load_waveform(const std::filesystem::path& path, int channel = 0);
Waveform parse_waveform(const std::vector<unsigned char>& bytes, int channel = 0);
/// Mono 16-bit PCM; samples are scaled by 32768, rounded and clipped.
std::vector<unsigned char> encode_waveform(const Waveform& w);
void write_waveform(const std::filesystem::path& path, const Waveform& w);

// f0 tracks -------------------------------------------------------------------

inline constexpr double kTrackRate = 100.0;

/// Parses `<time>\t<hz>` rows. 0 Hz marks voiceless samples (valid = false).
/// The row spacing must be 1/100 s within 1%.
SampledTrack parse_f0_track(std::string_view text);
SampledTrack load_f0_track(const std::filesystem::path& path);
std::string format_f0_track(const SampledTrack& track);
void write_f0_track(const std::filesystem::path& path, const SampledTrack& track);

// Annotation -------------------------------------------------------------------

DialogAnnotation parse_annotation(std::string_view text, std::string session_id);
DialogAnnotation load_annotation(const std::filesystem::path& path);
/// Canonical serialization: SPK, TASK, TURN, WORD records, each block in
/// time order; times use 3 decimals unless more are needed to round-trip.
std::string format_annotation(const DialogAnnotation& ann);
void write_annotation(const std::filesystem::path& path, const DialogAnnotation& ann);

std::pair<SampledTrack, DialogAnnotation> load_tracks_and_annotation(
    const std::filesystem::path& f0_path, const std::filesystem::path& ann_path);

/// Shortest decimal with >= 3 fraction digits that parses back to `t`.
std::string format_time(double t);

// Corpus manifest ----------------------------------------------------------------
//
//   SESSION <session_id> <annotation path>
//   CHANNEL <session_id> <speaker_id> <f0 path> <wav path>
//
// Tab-separated; relative paths resolve against the manifest's directory.

struct ChannelEntry {
  std::string speaker;
  std::filesystem::path f0;
  std::filesystem::path wav;
};

struct SessionEntry {
  std::string id;
  std::filesystem::path annotation;
  std::vector<ChannelEntry> channels;
};

std::vector<SessionEntry> load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<SessionEntry>& sessions);

/// One speaker's signals in a session.
struct Channel {
  std::string speaker;
  SampledTrack f0;
  Waveform wav;
};

struct SessionData {
  DialogAnnotation annotation;
  std::vector<Channel> channels;

  const Channel& channel(std::string_view speaker) const;
};

SessionData load_session(const SessionEntry& entry);

}  // namespace prosync::ingest
