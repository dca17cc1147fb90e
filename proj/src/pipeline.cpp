// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include "prosync/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "prosync/dsp.hpp"
#include "prosync/numeric.hpp"

namespace prosync::pipeline {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kEps = 1e-9;

struct Phrase {
  structure::Ipu ipu;
  SampledTrack contour;
  std::optional<styl::RegisterFit> fit;
};

struct Syllable {
  std::size_t phrase = 0;  // index into the speaker's phrases
  double time = 0.0;
  double duration = kNaN;
  Eigen::Index row = 0;  // row in the session feature matrix
  bool candidate = false;
  bool accented = false;
};

struct SpeakerState {
  std::string id;
  ChannelContours contours;
  SampledTrack energy;
  std::vector<Phrase> phrases;
  std::vector<Syllable> syllables;
};

// Population z-scores of the finite entries; NaN stays NaN.
void zscore(std::vector<Syllable>& syllables) {
  std::vector<double> v;
  for (const auto& s : syllables)
    if (std::isfinite(s.duration)) v.push_back(s.duration);
  if (v.empty()) return;
  const double m = num::mean(v);
  const double sd = num::population_sd(v);
  for (auto& s : syllables) {
    if (!std::isfinite(s.duration)) continue;
    s.duration = sd > 0.0 ? (s.duration - m) / sd : 0.0;
  }
}

}  // namespace

ChannelContours preprocess_f0(const SampledTrack& f0) {
  const SampledTrack voiced = dsp::remove_outliers(f0);
  std::vector<double> hz;
  for (Eigen::Index i = 0; i < voiced.size(); ++i)
    if (voiced.valid[i]) hz.push_back(voiced.values[i]);
  if (hz.empty()) throw Error("preprocess_f0: no voiced samples");

  SampledTrack smooth = dsp::interpolate_gaps(voiced);
  if (smooth.size() >= 5) smooth = dsp::savgol_smooth(smooth);
  // smoothing may overshoot near steep gaps; such samples cannot be converted
  for (Eigen::Index i = 0; i < smooth.size(); ++i)
    if (!(smooth.values[i] > 0.0)) smooth.valid[i] = false;

  ChannelContours out;
  out.base = dsp::semitone_base(Eigen::Map<const Vector>(hz.data(), static_cast<Eigen::Index>(hz.size())));
  out.semitone = dsp::to_semitones(smooth, out.base);
  out.hz = smooth;
  out.hz.valid = voiced.valid && smooth.valid;
  return out;
}

SessionResult analyze_session(const ingest::SessionData& data, const AnalysisParams& params) {
  const auto& ann = data.annotation;
  SessionResult result;
  const auto ipus = structure::segment_ipus(ann, params.pause);

  std::vector<SpeakerState> speakers;
  std::vector<structure::WordSyllables> words;
  std::vector<Eigen::Index> candidates;
  Eigen::Index rows = 0;
  for (const auto& spk : ann.speakers()) {
    const auto& channel = data.channel(spk.id);
    SpeakerState st;
    st.id = spk.id;
    try {
      st.contours = preprocess_f0(channel.f0);
    } catch (const Error& e) {
      result.warnings.push_back("speaker " + spk.id + ": " + e.what());
      st.contours.hz = channel.f0;
      st.contours.hz.valid.setConstant(false);
      st.contours.semitone = st.contours.hz;
      st.contours.semitone.unit = Unit::kSemitone;
    }
    st.energy = dsp::rms_energy(channel.wav);
    const Waveform bp = dsp::bandpass(channel.wav);

    for (const auto& ipu : ipus) {
      if (ipu.speaker != spk.id) continue;
      Phrase ph{ipu, st.contours.semitone.slice(ipu.start, ipu.end), std::nullopt};
      ph.fit = styl::fit_register(ph.contour, params.reg);
      const auto nuclei = structure::detect_syllable_nuclei(bp, ipu, params.nucleus);
      const auto durations = structure::inter_nucleus_durations(nuclei);
      for (std::size_t k = 0; k < nuclei.size(); ++k)
        st.syllables.push_back({st.phrases.size(), nuclei[k].time, durations[k], rows++});
      st.phrases.push_back(std::move(ph));
    }
    zscore(st.syllables);

    // syllables are in time order, so each word takes a contiguous run
    std::size_t next = 0;
    for (const auto& w : ann.words()) {
      if (w.speaker != spk.id) continue;
      while (next < st.syllables.size() && st.syllables[next].time < w.start - kEps) ++next;
      structure::WordSyllables ws{w.end - w.start, {}};
      for (std::size_t k = next; k < st.syllables.size() && st.syllables[k].time <= w.end + kEps; ++k)
        ws.syllables.push_back(st.syllables[k].row);
      if (ws.syllables.empty()) continue;
      candidates.push_back(ws.syllables.front());
      words.push_back(std::move(ws));
    }
    speakers.push_back(std::move(st));
  }

  // one accent model per session, shared by both speakers
  Matrix feats(rows, structure::kAccentFeatureCount);
  std::vector<std::pair<std::size_t, std::size_t>> owner(static_cast<std::size_t>(rows));
  for (std::size_t s = 0; s < speakers.size(); ++s) {
    for (std::size_t k = 0; k < speakers[s].syllables.size(); ++k) {
      const auto& syl = speakers[s].syllables[k];
      const auto& ph = speakers[s].phrases[syl.phrase];
      owner[static_cast<std::size_t>(syl.row)] = {s, k};
      if (ph.fit) {
        feats.row(syl.row) = structure::syllable_features(ph.contour, *ph.fit, syl.time,
                                                          syl.duration, params.accent_window)
                                 .transpose();
      } else {
        feats.row(syl.row).setConstant(kNaN);
        feats(syl.row, structure::kAccentFeatureCount - 1) = syl.duration;
      }
    }
  }
  for (const auto r : candidates) {
    const auto [s, k] = owner[static_cast<std::size_t>(r)];
    speakers[s].syllables[k].candidate = true;
  }
  if (!candidates.empty()) {
    const Matrix imputed = structure::impute_column_means(feats);
    try {
      const auto model = structure::bootstrap_accent_model(imputed, words, params.accent);
      Matrix cand(static_cast<Eigen::Index>(candidates.size()), imputed.cols());
      for (std::size_t i = 0; i < candidates.size(); ++i)
        cand.row(static_cast<Eigen::Index>(i)) = imputed.row(candidates[i]);
      const auto accented = structure::classify_accents(model, cand);
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto [s, k] = owner[static_cast<std::size_t>(candidates[i])];
        speakers[s].syllables[k].accented = accented[i];
      }
    } catch (const Error& e) {
      result.warnings.push_back(std::string("accent model: ") + e.what());
    }
  }

  for (const auto& st : speakers)
    for (const auto& syl : st.syllables)
      result.nuclei.push_back({st.id, syl.time, syl.candidate, syl.accented});

  for (const auto& turn : ann.turns()) {
    const auto it = std::find_if(speakers.begin(), speakers.end(),
                                 [&](const SpeakerState& s) { return s.id == turn.speaker; });
    const auto& st = *it;
    features::TurnAnalysis ta;
    ta.energy = features::gnl_stats(st.energy, turn.start, turn.end);
    ta.f0 = features::gnl_stats(st.contours.hz, turn.start, turn.end);
    std::size_t count = 0;
    for (std::size_t p = 0; p < st.phrases.size(); ++p) {
      const auto& ph = st.phrases[p];
      if (ph.ipu.turn_index != turn.index) continue;
      ta.phrases.push_back(ph.fit);
      for (const auto& syl : st.syllables) {
        if (syl.phrase != p) continue;
        ++count;
        if (!syl.accented) continue;
        ta.accents.push_back(ph.fit ? styl::stylize_accent(ph.contour, *ph.fit, syl.time,
                                                           params.accent_window, params.reg)
                                    : styl::AccentShape{});
      }
    }
    ta.rhythm = features::rhythm_features(st.energy, st.contours.semitone, count, turn.start,
                                          turn.end, params.rhythm_band, params.rhythm_cutoff);

    features::TurnFeatures row;
    row.session = ann.session_id();
    row.speaker = turn.speaker;
    row.task = turn.task;
    row.index = turn.index;
    row.role = ann.role_of(turn.speaker, turn.task);
    row.gender = ann.speaker(turn.speaker).gender;
    row.start = turn.start;
    row.end = turn.end;
    features::assemble_turn_features(ta, row);
    result.turns.push_back(std::move(row));
  }
  return result;
}

void write_nucleus_dump(std::ostream& os, std::span<const NucleusRecord> nuclei,
                        const std::string& speaker) {
  for (const auto& n : nuclei)
    if (n.speaker == speaker) os << ingest::format_time(n.time) << '\t' << (n.accented ? 1 : 0) << '\n';
}

}  // namespace prosync::pipeline
