// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "prosync/entrain.hpp"
#include "prosync/pipeline.hpp"
#include "prosync/synthgen.hpp"

using namespace prosync;
using namespace prosync::synthgen;

namespace {

constexpr int kMedian = 4;  // gnl_f0.med

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const auto n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Feature rows carrying the generated f0 level as the turn median in Hz.
std::vector<features::TurnFeatures> truth_rows(const SynthSession& s) {
  std::vector<features::TurnFeatures> rows;
  const auto& turns = s.data.annotation.turns();
  for (std::size_t i = 0; i < turns.size(); ++i) {
    features::TurnFeatures r;
    r.session = s.data.annotation.session_id();
    r.speaker = turns[i].speaker;
    r.task = turns[i].task;
    r.index = turns[i].index;
    r.start = turns[i].start;
    r.end = turns[i].end;
    r[kMedian] = 100.0 * std::exp2(s.truth[i].values[0] / 12.0);
    rows.push_back(r);
  }
  return rows;
}

// Mean adjacent and non-adjacent proximity of the f0 median.
std::pair<double, double> a_vs_na(const SynthSession& s, std::uint64_t seed) {
  const auto rows = truth_rows(s);
  num::Rng rng(seed);
  const auto pairs = entrain::pair_local(rows, entrain::group_sessions(rows)[0], rng);
  const auto cells = entrain::build_profile(entrain::distances(pairs, rows, entrain::speaker_means(rows)));
  double a = NAN, na = NAN;
  for (const auto& c : cells) {
    if (c.feature != "gnl_f0.med" || c.measure != entrain::Measure::kProximity) continue;
    if (c.condition == "a") a = *c.mean;
    if (c.condition == "na") na = *c.mean;
  }
  return {a, na};
}

}  // namespace

TEST_CASE("config validation") {
  SynthConfig cfg;
  cfg.gain = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.gain = 1.0;
  cfg.n_turns = 3;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.n_turns = 4;
  CHECK_NOTHROW(cfg.validate());
  CHECK(parse_mode("disentrain") == Mode::kDisentrain);
  CHECK_THROWS_AS(parse_mode("copy"), ValidationError);
  CHECK(parse_target("rate") == Target::kRate);
}

TEST_CASE("same seed gives identical sessions") {
  SynthConfig cfg;
  cfg.n_turns = 12;
  cfg.seed = 77;
  const auto a = generate_dyad(cfg);
  const auto b = generate_dyad(cfg);
  CHECK(ingest::format_annotation(a.data.annotation) == ingest::format_annotation(b.data.annotation));
  for (int c = 0; c < 2; ++c) {
    const auto& x = a.data.channels[c];
    const auto& y = b.data.channels[c];
    REQUIRE(x.wav.samples.size() == y.wav.samples.size());
    CHECK((x.wav.samples.array() == y.wav.samples.array()).all());
    CHECK((x.f0.values.array() == y.f0.values.array()).all());
    CHECK((x.f0.valid == y.f0.valid).all());
  }
  cfg.seed = 78;
  const auto c = generate_dyad(cfg);
  CHECK(ingest::format_annotation(c.data.annotation) != ingest::format_annotation(a.data.annotation));
}

TEST_CASE("generated annotation passes ingest validation") {
  SynthConfig cfg;
  cfg.n_turns = 50;
  cfg.turns_per_task = 20;
  const auto s = generate_dyad(cfg, 2);
  const auto& ann = s.data.annotation;
  CHECK(ann.session_id() == "synth03");
  CHECK(ann.turns().size() == 50u);
  CHECK(ann.tasks().size() == 3u);
  const auto text = ingest::format_annotation(ann);
  const auto back = ingest::parse_annotation(text, ann.session_id());
  CHECK(back.turns().size() == s.truth.size());
  CHECK(ingest::format_annotation(back) == text);
  // the f0 track survives its text format
  const auto& f0 = s.data.channels[0].f0;
  const auto parsed = ingest::parse_f0_track(ingest::format_f0_track(f0));
  CHECK((parsed.valid == f0.valid).all());
}

TEST_CASE("no entrainment leaves adjacent turns uncorrelated") {
  SynthConfig cfg;
  cfg.n_turns = 500;
  cfg.signals = false;
  cfg.seed = 2024;
  const auto s = generate_dyad(cfg);
  // initiator A, responder B, so the speaker mean offset cannot correlate
  std::vector<double> x, y;
  for (std::size_t k = 1; k < s.truth.size(); ++k) {
    if (s.truth[k - 1].speaker != "synth01.A" || s.truth[k].speaker != "synth01.B") continue;
    x.push_back(s.truth[k - 1].values[0]);
    y.push_back(s.truth[k].values[0]);
  }
  CHECK(x.size() > 150u);
  CHECK(std::abs(correlation(x, y)) < 0.1);
}

TEST_CASE("full proximity gain puts adjacent pairs closer than non-adjacent ones") {
  SynthConfig cfg;
  cfg.signals = false;
  cfg.mode = Mode::kProximity;
  cfg.gain = 1.0;
  int wins = 0;
  for (int run = 0; run < 100; ++run) {
    cfg.seed = 1000 + static_cast<std::uint64_t>(run);
    const auto [a, na] = a_vs_na(generate_dyad(cfg), cfg.seed);
    wins += a < na;
  }
  CHECK(wins >= 90);
}

TEST_CASE("disentrain mode pushes adjacent pairs apart") {
  SynthConfig cfg;
  cfg.signals = false;
  cfg.mode = Mode::kDisentrain;
  cfg.gain = 1.0;
  cfg.entrainment_rate = 1.0;
  cfg.n_turns = 400;
  const auto [a, na] = a_vs_na(generate_dyad(cfg), 5);
  CHECK(a > na);
}

TEST_CASE("responder filters restrict the manipulated turns") {
  SynthConfig cfg;
  cfg.signals = false;
  cfg.mode = Mode::kProximity;
  cfg.gain = 1.0;
  cfg.n_turns = 200;
  cfg.responder_role = Role::kDescriber;
  cfg.responder_gender = Gender::kFemale;
  const auto s = generate_dyad(cfg);
  const auto& ann = s.data.annotation;
  int entrained = 0;
  for (std::size_t k = 0; k < s.truth.size(); ++k) {
    if (!s.truth[k].entrained) continue;
    ++entrained;
    const auto& t = ann.turns()[k];
    CHECK(ann.role_of(t.speaker, t.task) == Role::kDescriber);
    CHECK(ann.speaker(t.speaker).gender == Gender::kFemale);
    CHECK(s.truth[k].values[0] == s.truth[k - 1].values[0]);
  }
  CHECK(entrained > 10);
}

TEST_CASE("pipeline recovers the generating values") {
  SynthConfig cfg;
  cfg.seed = 3;
  cfg.n_turns = 120;
  const auto s = generate_dyad(cfg);
  const auto result = pipeline::analyze_session(s.data);
  REQUIRE(result.turns.size() == s.truth.size());
  CHECK(result.warnings.empty());

  std::vector<double> med_true, med, rate_true, rate, lev_true, lev;
  for (std::size_t i = 0; i < result.turns.size(); ++i) {
    const auto& row = result.turns[i];
    const auto& tr = s.truth[i];
    CHECK(row.speaker == tr.speaker);
    CHECK(row.index == static_cast<int>(i));
    REQUIRE(row[kMedian]);
    med_true.push_back(100.0 * std::exp2(tr.values[0] / 12.0));
    med.push_back(*row[kMedian]);
    REQUIRE(row[35]);
    rate_true.push_back(tr.realized_rate);
    rate.push_back(*row[35]);
    // register level is relative to the speaker base, so compare within speaker
    if (tr.speaker == "synth01.A" && row[6]) {
      lev_true.push_back(tr.values[0]);
      lev.push_back(*row[6]);
    }
  }
  CHECK(correlation(med_true, med) > 0.8);
  CHECK(correlation(rate_true, rate) > 0.8);
  CHECK(lev.size() > 40u);
  CHECK(correlation(lev_true, lev) > 0.8);

  int accented = 0;
  for (const auto& n : result.nuclei) {
    accented += n.accented;
    CHECK((!n.accented || n.candidate));
  }
  CHECK(accented > 0);

  std::ostringstream os;
  pipeline::write_nucleus_dump(os, result.nuclei, "synth01.B");
  const auto dump = os.str();
  CHECK(dump.find('\t') != std::string::npos);
  CHECK(dump.find("\t1\n") != std::string::npos);
}

TEST_CASE("preprocessing keeps Hz on voiced samples only") {
  SampledTrack f0;
  f0.values = Vector::Constant(40, 200.0);
  f0.valid = Mask::Constant(40, true);
  for (int i = 10; i < 20; ++i) {
    f0.values[i] = 0.0;
    f0.valid[i] = false;
  }
  const auto c = pipeline::preprocess_f0(f0);
  CHECK(c.base == doctest::Approx(200.0));
  CHECK(c.hz.valid.count() == 30);
  CHECK(c.semitone.valid.all());
  CHECK(c.semitone.values.cwiseAbs().maxCoeff() < 1e-9);
  f0.valid.setConstant(false);
  CHECK_THROWS_AS(pipeline::preprocess_f0(f0), Error);
}
