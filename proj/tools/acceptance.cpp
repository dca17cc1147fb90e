// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checker: one PASS/FAIL line per criterion. Exit status is
// nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "prosync/dsp.hpp"
#include "prosync/entrain.hpp"
#include "prosync/features.hpp"
#include "prosync/pipeline.hpp"
#include "prosync/run.hpp"
#include "prosync/stats.hpp"
#include "prosync/structure.hpp"
#include "prosync/styl.hpp"
#include "prosync/synthgen.hpp"

using namespace prosync;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail << "failed: ";
    else detail << "; ";
    detail << what;
    pass = false;
  }
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

SampledTrack semitone_track(const Vector& v, double start = 0.0) {
  return SampledTrack::all_valid(v, 100.0, Unit::kSemitone, start);
}

Vector naive_dct(const Vector& x) {
  const auto n = x.size();
  Vector c(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double s = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      s += x[i] * std::cos(std::numbers::pi * k * (2.0 * i + 1) / (2.0 * n));
    c[k] = s * std::sqrt((k == 0 ? 1.0 : 2.0) / n);
  }
  return c;
}

// ---------------------------------------------------------------------------

void stylization(Outcome& out) {
  const auto t0 = Clock::now();
  double worst_lev = 0, worst_rng = 0;
  const Eigen::Index n = 150;
  for (double c0 : {-4.0, 0.0, 2.5, 9.0})
    for (double c1 : {-3.0, -1.0, 0.0, 2.0, 4.0}) {
      Vector y = Vector::LinSpaced(n, c0, c0 + c1);
      for (Eigen::Index i = 0; i < n; ++i) y[i] += (i % 4) < 2 ? 2.0 : -2.0;
      const auto fit = styl::fit_register(semitone_track(y));
      out.require(fit.has_value(), "register fit missing");
      if (!fit) return;
      worst_lev = std::max({worst_lev, std::abs(fit->lev_c0 - c0), std::abs(fit->lev_c1 - c1)});
      worst_rng = std::max({worst_rng, std::abs(fit->rng_c0 - 4.0), std::abs(fit->rng_c1)});
    }
  out.require(worst_lev <= 0.1, "level error " + fmt(worst_lev));
  out.require(worst_rng <= 0.1, "range error " + fmt(worst_rng));

  const Eigen::Vector4d coef(0.5, -1.2, 0.8, 0.3);
  double worst_poly = 0;
  for (double nucleus : {0.6, 1.0, 2.35}) {
    Vector v(61);
    const double start = nucleus - 0.3;
    for (int i = 0; i < 61; ++i) {
      const double t = (start + i / 100.0 - nucleus) / 0.15;
      v[i] = coef[0] + coef[1] * t + coef[2] * t * t + coef[3] * t * t * t;
    }
    const auto s = styl::fit_accent_poly(semitone_track(v, start), nucleus);
    out.require(s.has_value(), "accent fit missing");
    if (s) worst_poly = std::max(worst_poly, (*s - coef).cwiseAbs().maxCoeff());
  }
  out.require(worst_poly <= 1e-6, "polynomial error " + fmt(worst_poly));
  const double elapsed = seconds_since(t0);
  out.require(elapsed < 1.0, "took " + fmt(elapsed) + " s");
  out.detail << (out.pass ? "" : "; ") << "level err " << fmt(worst_lev) << ", range err "
             << fmt(worst_rng) << ", poly err " << fmt(worst_poly);
}

void rhythm(Outcome& out) {
  auto cosine = [](double hz) {
    Vector v(300);
    for (int i = 0; i < 300; ++i) v[i] = std::cos(2 * std::numbers::pi * hz * i / 100.0);
    return SampledTrack::all_valid(v, 100.0, Unit::kRms);
  };
  const auto w4 = features::rhythm_weight(cosine(4.0), 4.0);
  const auto w8 = features::rhythm_weight(cosine(8.0), 4.0);
  out.require(w4 && *w4 >= 0.9, "4 Hz weight below 0.9");
  out.require(w8 && *w8 <= 0.1, "8 Hz weight above 0.1");

  num::Rng rng(11);
  double worst = 0;
  for (Eigen::Index n = 1; n <= 256; ++n) {
    Vector x(n);
    for (auto& v : x) v = rng.normal(0, 1);
    worst = std::max(worst, (dsp::dct2(x) - naive_dct(x)).cwiseAbs().maxCoeff());
  }
  out.require(worst <= 1e-9, "DCT deviation " + fmt(worst));
  out.detail << (out.pass ? "" : "; ") << "w(4 Hz) " << fmt(w4.value_or(NAN)) << ", w(8 Hz) "
             << fmt(w8.value_or(NAN)) << ", DCT max dev " << fmt(worst, 2) << " for N 1..256";
}

void detection(Outcome& out) {
  const double rate = 16000;
  Waveform w;
  w.rate = rate;
  w.samples = Vector::Zero(static_cast<Eigen::Index>(1.6 * rate));
  const double centers[] = {0.3, 0.75, 1.2}, amps[] = {0.5, 0.4, 0.6};
  num::Rng rng(3);
  for (Eigen::Index i = 0; i < w.samples.size(); ++i) {
    const double t = i / rate;
    double v = rng.normal(0, 1e-4);
    for (int k = 0; k < 3; ++k) {
      const double u = (t - centers[k]) / 0.12 + 0.5;
      if (u > 0 && u < 1)
        v += amps[k] * std::pow(std::sin(std::numbers::pi * u), 2) *
             std::sin(2 * std::numbers::pi * 1000 * t);
    }
    w.samples[i] = v;
  }
  const auto nuclei = structure::detect_syllable_nuclei(w, structure::Ipu{"A", 0.05, 1.5, 0});
  out.require(nuclei.size() == 3, std::to_string(nuclei.size()) + " nuclei");
  double worst = 0;
  if (nuclei.size() == 3)
    for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(nuclei[k].time - centers[k]));
  out.require(worst <= 0.05 + 1e-9, "nucleus offset " + fmt(worst));

  structure::AccentModel m;
  m.centroid0 = Vector::Zero(1);
  m.centroid1 = Vector::Ones(1);
  m.weights = Vector::Ones(1);
  Matrix c(100, 1);
  std::vector<int> order(100);
  for (int i = 0; i < 100; ++i) order[i] = i;
  for (int i = 99; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  for (int i = 0; i < 100; ++i) c(i, 0) = (order[i] + 1) / 202.0;
  const auto accented = structure::classify_accents(m, c);
  const auto marked = std::count(accented.begin(), accented.end(), true);
  out.require(marked == 18, std::to_string(marked) + " accented");
  out.detail << (out.pass ? "" : "; ") << nuclei.size() << " nuclei, max offset "
             << fmt(worst * 1000) << " ms, " << marked << "/100 accented";
}

stats::HarvestTable load_fixture(const char* name) {
  std::ifstream is(std::string(PROSYNC_FIXTURES) + "/" + name);
  if (!is) throw Error(std::string("missing fixture ") + name);
  return stats::read_harvest_csv(is);
}

const stats::Condensed* find_cell(const std::vector<stats::Condensed>& v, const std::string& group,
                                  const std::string& column) {
  for (const auto& c : v)
    if (c.group == group && c.column == column) return &c;
  return nullptr;
}

void condensation(Outcome& out) {
  const auto local = load_fixture("table_local.csv");
  const auto global = load_fixture("table_global.csv");
  const stats::HarvestTable rows(local.begin() + 3, local.begin() + 6);
  const auto worked = stats::condense(rows, stats::Grouping::kFeatureSet);
  const auto* prox = find_cell(worked, "gnl_f0", "prox");
  const auto* sync = find_cell(worked, "gnl_f0", "sync");
  out.require(prox && prox->probability && *prox->probability == 1.0 / 3.0, "P(prox|gnl_f0) != 1/3");
  out.require(sync && sync->probability && *sync->probability == 1.0, "P(sync|gnl_f0) != 1");

  int cells = 0, mismatches = 0;
  for (const auto& e : oracles::kTableCounts) {
    const auto& table = std::string(e.level) == "global" ? global : local;
    const auto c = stats::condense(table, e.grouping);
    for (int k = 0; k < 4; ++k) {
      ++cells;
      const auto* cell = find_cell(c, e.group, stats::kColumns[k]);
      const bool ok = cell && cell->count == e.count[k] && cell->total == e.total &&
                      cell->probability &&
                      *cell->probability == static_cast<double>(e.count[k]) / e.total;
      mismatches += !ok;
    }
  }
  out.require(mismatches == 0, std::to_string(mismatches) + " hand-count mismatches");
  out.detail << (out.pass ? "" : "; ") << "worked example 1/3 and 1, " << cells - mismatches << "/"
             << cells << " hand-counted cells exact";
}

void statistics(Outcome& out) {
  const auto t0 = Clock::now();
  const std::vector<double> p{0.01, 0.02, 0.03, 0.04};
  const auto adj = stats::fdr_correct(p);
  const bool fdr_ok = std::all_of(adj.begin(), adj.end(), [](double a) {
    return std::abs(a - 1.0 / 12.0) <= 1e-15;
  });
  out.require(fdr_ok, "step-up values differ from 1/12");

  Vector y(10);
  y << 1.2, 0.4, 2.9, 1.1, 3.3, 2.6, 4.8, 3.1, 5.9, 4.4;
  Matrix x(10, 3);
  for (int i = 0; i < 10; ++i) x.row(i) << 1.0, i, (i % 2) - 0.5;
  const std::vector<int> g1{0, 1, 2, 0, 1, 2, 0, 1, 2, 0}, g2{1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
  const auto fit = stats::MixedModel(y, x, g1, g2).fit_at({0.0, 0.0});
  const Eigen::Vector3d ols_beta(0.57375, 0.5325, -1.8325);
  const double beta_err = (fit.beta - ols_beta).cwiseAbs().maxCoeff();
  const double se_err = std::max(std::abs(fit.se[0] - 0.16979438721162554),
                                 std::abs(fit.se[2] - 0.183514791151636));
  out.require(beta_err <= 1e-6 && se_err <= 1e-6, "OLS reduction error " + fmt(beta_err));

  int covered = 0;
  for (int run = 0; run < 200; ++run) {
    num::Rng rng(num::mix_seed(2024, run));
    const auto obs = oracles::simulate_pairing(rng, 8, 160, -1.0, 0.5, 1.0);
    num::Rng test_rng(run);
    const auto tests = stats::test_pairing(obs, test_rng);
    if (!tests.empty()) covered += std::abs(tests.front().estimate + 1.0) <= 3.0 * tests.front().se;
  }
  out.require(covered >= 190, "coverage " + std::to_string(covered) + "/200");
  const double elapsed = seconds_since(t0);
  out.require(elapsed < 120.0, "took " + fmt(elapsed) + " s");
  out.detail << (out.pass ? "" : "; ") << "FDR exact, OLS err " << fmt(beta_err, 2) << ", coverage "
             << covered << "/200";
}

// Dyad settings under which a single 120-turn dialog carries enough signal
// for the adjusted pairing test: one task, same-gender speakers with close
// baselines and 80% of eligible turns responding.
synthgen::SynthConfig power_config(std::uint64_t seed, synthgen::Mode mode, double gain) {
  synthgen::SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_turns = 120;
  cfg.turns_per_task = 120;
  cfg.genders = {Gender::kFemale, Gender::kFemale};
  cfg.level_sd_speaker = 0.5;
  cfg.turn_min = 1.0;
  cfg.turn_max = 2.5;
  cfg.pause_min = 0.1;
  cfg.pause_max = 0.5;
  cfg.entrainment_rate = 0.8;
  cfg.mode = mode;
  cfg.gain = gain;
  cfg.disentrain_shift = 5.0;
  return cfg;
}

struct PowerRun {
  bool a_below_na = false;
  bool entrain = false;     // x_x in the prox column of gnl_f0.med
  bool disentrain = false;  // x_x in the -prox column
};

PowerRun power_run(const synthgen::SynthConfig& cfg) {
  const auto session = synthgen::generate_dyad(cfg);
  const auto result = pipeline::analyze_session(session.data);
  const auto& rows = result.turns;
  num::Rng pair_rng(num::mix_seed(cfg.seed, 100));
  const auto pairs = entrain::pair_local(rows, entrain::group_sessions(rows)[0], pair_rng);
  const auto records = entrain::distances(pairs, rows, entrain::speaker_means(rows));

  PowerRun r;
  double a = NAN, na = NAN;
  for (const auto& c : entrain::build_profile(records)) {
    if (c.feature != "gnl_f0.med" || c.measure != entrain::Measure::kProximity || !c.mean) continue;
    if (c.condition == "a") a = *c.mean;
    if (c.condition == "na") na = *c.mean;
  }
  r.a_below_na = a < na;

  num::Rng test_rng(num::mix_seed(cfg.seed, 2));
  const auto tests = stats::run_level_tests(records, stats::Level::kLocal, test_rng);
  for (const auto& row : stats::harvest(tests)) {
    if (row.set != "gnl_f0" || row.name != "med") continue;
    auto has = [&](int col) {
      const auto& v = row.columns[col];
      return std::find(v.begin(), v.end(), "x_x") != v.end();
    };
    r.entrain = has(0);
    r.disentrain = has(2);
  }
  return r;
}

void power(Outcome& out) {
  const auto t0 = Clock::now();
  const int runs = 100;
  int win = 0, hit = 0, null_a = 0, false_pos = 0, dis_win = 0, dis_hit = 0;
  for (int k = 0; k < runs; ++k) {
    const std::uint64_t seed = 500 + static_cast<std::uint64_t>(k);
    const auto g1 = power_run(power_config(seed, synthgen::Mode::kProximity, 1.0));
    win += g1.a_below_na;
    hit += g1.entrain;
    const auto g0 = power_run(power_config(seed, synthgen::Mode::kProximity, 0.0));
    null_a += g0.a_below_na;
    false_pos += g0.entrain || g0.disentrain;
    const auto dis = power_run(power_config(seed, synthgen::Mode::kDisentrain, 1.0));
    dis_win += !dis.a_below_na;
    dis_hit += dis.disentrain;
  }
  out.require(win >= 90, "gain 1: a < na in " + std::to_string(win));
  out.require(hit >= 90, "gain 1: significant in " + std::to_string(hit));
  out.require(false_pos <= 10, "gain 0: " + std::to_string(false_pos) + " false positives");
  out.require(dis_win >= 90, "disentrain: a > na in " + std::to_string(dis_win));
  out.require(dis_hit >= 90, "disentrain: significant in " + std::to_string(dis_hit));
  const double elapsed = seconds_since(t0);
  out.require(elapsed < 300.0, "took " + fmt(elapsed) + " s");
  out.detail << (out.pass ? "" : "; ") << "gain 1: a<na " << win << ", prox " << hit
             << "; gain 0: a<na " << null_a << ", false pos " << false_pos << "; disentrain: a>na "
             << dis_win << ", -prox " << dis_hit << " (of " << runs << ")";
}

std::vector<fs::path> artifact_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir));
  std::sort(files.begin(), files.end());
  return files;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

void determinism(Outcome& out, const fs::path& scratch) {
  const fs::path dir = scratch / "determinism";
  fs::remove_all(dir);
  run::RunConfig cfg;
  cfg.seed = 7;
  cfg.synth.seed = 7;
  cfg.synth.sessions = 2;
  cfg.synth.n_turns = 60;
  cfg.synth.turns_per_task = 20;
  cfg.synth.mode = synthgen::Mode::kProximity;
  cfg.synth.gain = 0.5;
  cfg.manifest = synthgen::write_corpus(cfg.synth, dir / "corpus");
  cfg.dump_nuclei = true;
  // same output path both times, since run_meta records it
  cfg.output = dir / "out";
  run::run(cfg);
  fs::rename(dir / "out", dir / "out1");
  run::run(cfg);
  fs::rename(dir / "out", dir / "out2");
  const auto a = artifact_files(dir / "out1"), b = artifact_files(dir / "out2");
  out.require(a == b, "artifact sets differ");
  int csv = 0, differing = 0;
  for (const auto& f : a) {
    csv += f.extension() == ".csv";
    if (slurp(dir / "out1" / f) != slurp(dir / "out2" / f)) {
      ++differing;
      out.require(false, f.string() + " differs");
    }
  }
  out.require(csv > 0, "no CSV artifacts");
  out.detail << (out.pass ? "" : "; ") << a.size() - differing << "/" << a.size()
             << " artifacts identical (" << csv << " CSV)";
  fs::remove_all(dir);
}

void throughput(Outcome& out, const fs::path& scratch) {
  const fs::path dir = scratch / "throughput";
  fs::remove_all(dir);
  run::RunConfig cfg;
  cfg.seed = 9;
  cfg.synth.seed = 9;
  cfg.synth.sessions = 9;
  cfg.synth.n_turns = 720;
  cfg.synth.turns_per_task = 40;
  cfg.synth.mode = synthgen::Mode::kProximity;
  cfg.synth.gain = 0.5;
  cfg.manifest = synthgen::write_corpus(cfg.synth, dir / "corpus");
  cfg.output = dir / "out";

  double hours = 0;
  for (const auto& e : ingest::load_manifest(cfg.manifest)) {
    const auto ann = ingest::load_annotation(e.annotation);
    hours += (ann.turns().back().end - ann.turns().front().start) / 3600.0;
  }
  const auto t0 = Clock::now();
  const auto report = run::run(cfg);
  const double elapsed = seconds_since(t0);
  out.require(report.errors.empty() && report.sessions == 9, "sessions failed");
  out.require(hours >= 5.5, "corpus only " + fmt(hours) + " h");
  out.require(elapsed < 300.0, "took " + fmt(elapsed) + " s");
  out.detail << (out.pass ? "" : "; ") << report.sessions << " sessions, " << fmt(hours) << " h, "
             << report.turns << " turns in " << fmt(elapsed) << " s";
  fs::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prosync acceptance checks"};
  std::vector<int> only;
  std::string scratch = (fs::temp_directory_path() / "prosync_acceptance").string();
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 8));
  app.add_option("--scratch", scratch, "Directory for temporary corpora");
  CLI11_PARSE(app, argc, argv);

  const fs::path scratch_dir = scratch;
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"stylization recovery", stylization},
      {"rhythm weight and DCT", rhythm},
      {"nucleus and accent detection", detection},
      {"condensation fixtures", condensation},
      {"statistics", statistics},
      {"end-to-end power", power},
      {"determinism", [&](Outcome& o) { determinism(o, scratch_dir); }},
      {"throughput", [&](Outcome& o) { throughput(o, scratch_dir); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome out;
    const auto t0 = Clock::now();
    try {
      criteria[i].second(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    failed += !out.pass;
    std::cout << (out.pass ? "PASS" : "FAIL") << " " << id << " " << criteria[i].first << ": "
              << out.detail.str() << " [" << fmt(seconds_since(t0)) << " s]" << std::endl;
  }
  std::error_code ec;
  fs::remove(scratch_dir, ec);
  return failed == 0 ? 0 : 1;
}
