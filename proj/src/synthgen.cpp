// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include "prosync/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

#include "prosync/features.hpp"
#include "prosync/numeric.hpp"

namespace prosync::synthgen {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRipple = 12.0;      // Hz, above the rhythm cutoff
constexpr double kBurstShare = 0.55;  // voiced share of a syllable period
constexpr double kAccentSpan = 0.15;  // half width of an accent bump, s
constexpr double kAccentGain = 1.5;   // amplitude boost of accented syllables

struct Syllable {
  double center = 0.0;
  double length = 0.0;
  bool accented = false;
};

struct TurnPlan {
  int speaker = 0;
  int task = 0;
  double start = 0.0;
  double end = 0.0;
  std::array<double, kTargetCount> values{};
  std::vector<Syllable> syllables;
  std::vector<ingest::Word> words;
  bool entrained = false;
};

double clamp_target(Target t, double v) {
  switch (t) {
    case Target::kF0Range: return std::max(v, 1.0);
    case Target::kEnergy: return std::min(v, -3.0);
    case Target::kRate: return std::clamp(v, 2.5, 7.5);
    default: return v;
  }
}

std::string session_name(int index) {
  std::string n = std::to_string(index + 1);
  return "synth" + std::string(n.size() < 2 ? 2 - n.size() : 0, '0') + n;
}

// Lays out words and syllables of one turn starting at `cursor`.
void lay_out_turn(const SynthConfig& cfg, num::Rng& rng, const std::string& speaker,
                  TurnPlan& turn, double cursor) {
  const double rate = turn.values[static_cast<int>(Target::kRate)];
  const double period = 1.0 / rate;
  const double burst = std::min(kBurstShare * period, 0.12);
  const double target = rng.uniform(cfg.turn_min, cfg.turn_max);
  const int total = std::max(2, static_cast<int>(std::lround(target * rate)));
  turn.start = cursor;
  int done = 0;
  while (done < total) {
    if (done > 0 && rng.uniform() < cfg.word_pause_prob) cursor += cfg.word_pause;
    const bool short_word = rng.uniform() < cfg.short_word_prob;
    const int left = total - done;
    const int k = short_word ? 1
                             : 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(
                                       std::min(cfg.max_word_syllables, left))));
    const bool accent = !short_word && rng.uniform() < cfg.accent_prob;
    for (int j = 0; j < k; ++j)
      turn.syllables.push_back({cursor + (j + 0.5) * period, burst, accent && j == 0});
    ingest::Word w{speaker, cursor, cursor + k * period, std::string(static_cast<std::size_t>(k), 'a')};
    if (short_word) {
      // a clitic: the annotated span covers only the voiced part
      w.start = cursor + 0.5 * (period - burst);
      w.end = w.start + burst;
      w.text = "e";
    }
    turn.words.push_back(w);
    cursor += k * period;
    done += k;
  }
  turn.end = turn.words.back().end;
}

double semitone_at(const SynthConfig& cfg, const TurnPlan& turn, double t) {
  const double level = turn.values[static_cast<int>(Target::kF0Level)];
  const double range = turn.values[static_cast<int>(Target::kF0Range)];
  const double u = (t - turn.start) / (turn.end - turn.start);
  double st = level + cfg.declination * (0.5 - u) + 0.5 * range * std::sin(kTwoPi * kRipple * t);
  for (const auto& s : turn.syllables) {
    if (!s.accented || std::abs(t - s.center) >= kAccentSpan) continue;
    st += cfg.accent_height * 0.5 * (1.0 + std::cos(std::numbers::pi * (t - s.center) / kAccentSpan));
  }
  return st;
}

}  // namespace

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::kNone: return "none";
    case Mode::kProximity: return "proximity";
    case Mode::kSynchrony: return "synchrony";
    case Mode::kDisentrain: return "disentrain";
  }
  return "";
}

Mode parse_mode(const std::string& s) {
  for (Mode m : {Mode::kNone, Mode::kProximity, Mode::kSynchrony, Mode::kDisentrain})
    if (s == mode_name(m)) return m;
  throw ValidationError("unknown entrainment mode '" + s + "'");
}

const char* target_name(Target t) {
  switch (t) {
    case Target::kF0Level: return "f0_level";
    case Target::kF0Range: return "f0_range";
    case Target::kEnergy: return "energy";
    case Target::kRate: return "rate";
  }
  return "";
}

Target parse_target(const std::string& s) {
  for (Target t : {Target::kF0Level, Target::kF0Range, Target::kEnergy, Target::kRate})
    if (s == target_name(t)) return t;
  throw ValidationError("unknown synthesis target '" + s + "'");
}

void SynthConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("synth config: ") + what);
  };
  require(gain >= 0.0 && gain <= 1.0, "gain must lie in [0, 1]");
  require(n_turns >= 4, "n_turns must be at least 4");
  require(sessions >= 1, "sessions must be at least 1");
  require(turns_per_task >= 1, "turns_per_task must be at least 1");
  require(turn_min > 0.0 && turn_max >= turn_min, "turn duration bounds");
  require(pause_min > 0.0 && pause_max >= pause_min, "pause bounds");
  require(max_word_syllables >= 1, "max_word_syllables must be at least 1");
  require(entrainment_rate >= 0.0 && entrainment_rate <= 1.0, "entrainment_rate must lie in [0, 1]");
  require(same_speaker_prob >= 0.0 && same_speaker_prob < 1.0, "same_speaker_prob");
  require(female_hz > 0.0 && male_hz > 0.0, "base frequencies must be positive");
  require(audio_rate > 2.0 * carrier && audio_rate > 8000.0, "audio rate too low");
}

SynthSession generate_dyad(const SynthConfig& cfg, int index) {
  cfg.validate();
  const num::Rng root(num::mix_seed(cfg.seed, static_cast<std::uint64_t>(index)));
  num::Rng traits = root.fork(1), schedule = root.fork(2), voice = root.fork(3);

  const std::string sid = session_name(index);
  const std::array<std::string, 2> ids = {sid + ".A", sid + ".B"};
  const auto& genders = cfg.genders;

  std::array<std::array<double, kTargetCount>, 2> mean{}, sd{};
  for (int s = 0; s < 2; ++s) {
    const double base = genders[s] == Gender::kFemale ? cfg.female_hz : cfg.male_hz;
    mean[s] = {12.0 * std::log2(base / 100.0) + traits.normal(0.0, cfg.level_sd_speaker),
               traits.normal(cfg.range_mean, cfg.range_sd_speaker),
               traits.normal(cfg.energy_db_mean, cfg.energy_db_sd_speaker),
               traits.normal(cfg.rate_mean, cfg.rate_sd_speaker)};
    sd[s] = {cfg.level_sd_turn, cfg.range_sd_turn, cfg.energy_db_sd_turn, cfg.rate_sd_turn};
  }
  const int n_tasks = (cfg.n_turns + cfg.turns_per_task - 1) / cfg.turns_per_task;
  auto describer = [](int task) { return task % 2; };

  std::vector<TurnPlan> turns;
  double cursor = 0.5;
  for (int k = 0; k < cfg.n_turns; ++k) {
    TurnPlan t;
    t.task = k / cfg.turns_per_task;
    if (k > 0 && t.task != turns.back().task) cursor += 1.0;
    const bool same = schedule.uniform() < cfg.same_speaker_prob;
    t.speaker = k == 0 ? 0 : same ? turns.back().speaker : 1 - turns.back().speaker;
    const int s = t.speaker;
    std::array<double, kTargetCount> own{};
    for (int f = 0; f < kTargetCount; ++f) own[f] = schedule.normal(mean[s][f], sd[s][f]);
    const bool respond = schedule.uniform() < cfg.entrainment_rate;

    t.values = own;
    const Role role = describer(t.task) == s ? Role::kDescriber : Role::kFollower;
    const bool eligible = k > 0 && turns.back().speaker != s && cfg.mode != Mode::kNone &&
                          respond && (!cfg.responder_role || *cfg.responder_role == role) &&
                          (!cfg.responder_gender || *cfg.responder_gender == genders[s]);
    if (eligible) {
      t.entrained = true;
      const auto& prev = turns.back();
      for (Target target : cfg.targets) {
        const int f = static_cast<int>(target);
        const double g = cfg.gain, x = prev.values[f];
        switch (cfg.mode) {
          case Mode::kProximity: t.values[f] = (1.0 - g) * own[f] + g * x; break;
          case Mode::kSynchrony:
            t.values[f] = mean[s][f] + (1.0 - g) * (own[f] - mean[s][f]) +
                          g * (x - mean[prev.speaker][f]);
            break;
          case Mode::kDisentrain:
            t.values[f] = own[f] + g * cfg.disentrain_shift * sd[s][f] * (own[f] >= x ? 1.0 : -1.0);
            break;
          case Mode::kNone: break;
        }
      }
    }
    for (int f = 0; f < kTargetCount; ++f) t.values[f] = clamp_target(static_cast<Target>(f), t.values[f]);
    lay_out_turn(cfg, schedule, ids[s], t, cursor);
    cursor = t.end + schedule.uniform(cfg.pause_min, cfg.pause_max);
    turns.push_back(std::move(t));
  }
  const double total = cursor + 0.5;

  // annotation
  std::vector<ingest::Speaker> speakers = {{ids[0], genders[0]}, {ids[1], genders[1]}};
  std::vector<ingest::Task> tasks;
  for (int j = 0; j < n_tasks; ++j) {
    ingest::Task task{"t" + std::to_string(j + 1), 0.0, 0.0, ids[describer(j)],
                      std::round(schedule.uniform(20.0, 100.0))};
    bool first = true;
    for (const auto& t : turns) {
      if (t.task != j) continue;
      if (first) task.start = t.start;
      first = false;
      task.end = t.end;
    }
    tasks.push_back(task);
  }
  std::vector<ingest::Turn> ann_turns;
  std::vector<ingest::Word> words;
  for (const auto& t : turns) {
    ann_turns.push_back({ids[t.speaker], tasks[t.task].id, t.start, t.end, 0});
    words.insert(words.end(), t.words.begin(), t.words.end());
  }

  SynthSession out;
  out.data.annotation = ingest::DialogAnnotation(sid, speakers, tasks, ann_turns, words);

  if (!cfg.signals) {
    for (int s = 0; s < 2; ++s) out.data.channels.push_back({ids[s], {}, {}});
  }
  // signals
  const auto n_f0 = static_cast<Eigen::Index>(std::ceil(total * ingest::kTrackRate));
  const auto n_wav = static_cast<Eigen::Index>(std::ceil(total * cfg.audio_rate));
  const double noise = std::pow(10.0, cfg.noise_db / 20.0) * std::sqrt(3.0);
  for (int s = 0; s < 2 && cfg.signals; ++s) {
    SampledTrack f0;
    f0.values = Vector::Zero(n_f0);
    f0.valid = Mask::Constant(n_f0, false);
    f0.rate = ingest::kTrackRate;
    f0.unit = Unit::kHertz;
    Waveform wav;
    wav.rate = cfg.audio_rate;
    wav.samples.resize(n_wav);
    num::Rng hiss = root.fork(4 + static_cast<std::uint64_t>(s));
    for (Eigen::Index i = 0; i < n_wav; ++i) wav.samples[i] = noise * (2.0 * hiss.uniform() - 1.0);

    for (const auto& t : turns) {
      if (t.speaker != s) continue;
      const double amp = std::pow(10.0, t.values[static_cast<int>(Target::kEnergy)] / 20.0);
      for (const auto& syl : t.syllables) {
        const double t0 = syl.center - 0.5 * syl.length;
        const double a = amp * (syl.accented ? kAccentGain : 1.0);
        const auto first = static_cast<Eigen::Index>(std::ceil(t0 * cfg.audio_rate));
        const auto last = static_cast<Eigen::Index>(std::floor((t0 + syl.length) * cfg.audio_rate));
        for (Eigen::Index i = std::max<Eigen::Index>(first, 0); i <= last && i < n_wav; ++i) {
          const double tt = static_cast<double>(i) / cfg.audio_rate;
          const double env = 0.5 * (1.0 - std::cos(kTwoPi * (tt - t0) / syl.length));
          wav.samples[i] += a * env * std::sin(kTwoPi * cfg.carrier * tt);
        }
        const auto v0 = static_cast<Eigen::Index>(std::ceil(t0 * ingest::kTrackRate));
        const auto v1 = static_cast<Eigen::Index>(std::floor((t0 + syl.length) * ingest::kTrackRate));
        for (Eigen::Index i = std::max<Eigen::Index>(v0, 0); i <= v1 && i < n_f0; ++i) {
          const double tt = static_cast<double>(i) / ingest::kTrackRate;
          const double st = semitone_at(cfg, t, tt) + voice.normal(0.0, cfg.jitter);
          f0.values[i] = 100.0 * std::exp2(st / 12.0);
          f0.valid[i] = true;
        }
      }
    }
    out.data.channels.push_back({ids[s], std::move(f0), std::move(wav)});
  }

  for (const auto& t : turns) {
    TurnTruth tr;
    tr.speaker = ids[t.speaker];
    tr.start = t.start;
    tr.end = t.end;
    tr.values = t.values;
    tr.syllables = static_cast<int>(t.syllables.size());
    tr.realized_rate = static_cast<double>(t.syllables.size()) / (t.end - t.start);
    tr.entrained = t.entrained;
    out.truth.push_back(tr);
  }
  return out;
}

void write_truth_csv(std::ostream& os, std::span<const TurnTruth> truth) {
  os << "index,speaker,start,end,f0_level,f0_range,energy,rate,realized_rate,syllables,entrained\n";
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto& t = truth[i];
    os << i << ',' << t.speaker << ',' << ingest::format_time(t.start) << ','
       << ingest::format_time(t.end);
    for (double v : t.values) os << ',' << features::format_number(v);
    os << ',' << features::format_number(t.realized_rate) << ',' << t.syllables << ','
       << (t.entrained ? 1 : 0) << '\n';
  }
}

std::filesystem::path write_corpus(const SynthConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<ingest::SessionEntry> entries;
  for (int i = 0; i < cfg.sessions; ++i) {
    const auto session = generate_dyad(cfg, i);
    const auto& ann = session.data.annotation;
    ingest::SessionEntry entry{ann.session_id(), ann.session_id() + ".ann", {}};
    ingest::write_annotation(dir / entry.annotation, ann);
    for (const auto& ch : session.data.channels) {
      ingest::ChannelEntry c{ch.speaker, ch.speaker + ".f0", ch.speaker + ".wav"};
      ingest::write_f0_track(dir / c.f0, ch.f0);
      ingest::write_waveform(dir / c.wav, ch.wav);
      entry.channels.push_back(c);
    }
    std::ofstream truth(dir / ("truth_" + ann.session_id() + ".csv"));
    write_truth_csv(truth, session.truth);
    entries.push_back(std::move(entry));
  }
  const auto manifest = dir / "manifest.tsv";
  ingest::write_manifest(manifest, entries);
  return manifest;
}

}  // namespace prosync::synthgen
