// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "prosync/structure.hpp"

using namespace prosync;
using namespace prosync::structure;

namespace {

// Bursts of a 1 kHz tone under a Hann envelope, with faint noise.
Waveform bursts(double duration, const std::vector<std::pair<double, double>>& centers_amps,
                double width = 0.12) {
  const double rate = 16000;
  const auto n = static_cast<Eigen::Index>(duration * rate);
  Waveform w;
  w.rate = rate;
  w.samples = Vector::Zero(n);
  std::mt19937 gen(3);
  std::normal_distribution<double> g(0, 1e-4);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = i / rate;
    double v = g(gen);
    for (auto [c, amp] : centers_amps) {
      const double u = (t - c) / width + 0.5;
      if (u > 0 && u < 1)
        v += amp * std::pow(std::sin(std::numbers::pi * u), 2) *
             std::sin(2 * std::numbers::pi * 1000 * t);
    }
    w.samples[i] = v;
  }
  return w;
}

// Brute-force restatement of the nucleus rule with explicit sums.
std::vector<double> oracle_nuclei(const Waveform& w, double start, double end) {
  auto rms = [&](double t, double len) {
    const long width = std::lround(len * w.rate);
    const long first = std::lround(t * w.rate) - width / 2;
    double s = 0;
    for (long i = first; i < first + width; ++i)
      if (i >= 0 && i < w.samples.size()) s += w.samples[i] * w.samples[i];
    return std::sqrt(s / width);
  };
  std::vector<double> ts, a, r;
  for (int k = 0; start + k * 0.05 <= end + 1e-9; ++k) {
    ts.push_back(start + k * 0.05);
    a.push_back(rms(ts.back(), 0.05));
    r.push_back(rms(ts.back(), 0.11));
  }
  double mx = 0;
  for (double v : a) mx = std::max(mx, v);
  std::vector<double> out;
  std::size_t i = 0;
  while (i < ts.size()) {
    if (!(a[i] > 1.1 * r[i] && a[i] > 0.1 * mx)) {
      ++i;
      continue;
    }
    std::size_t best = i;
    while (i < ts.size() && a[i] > 1.1 * r[i] && a[i] > 0.1 * mx) {
      if (a[i] > a[best]) best = i;
      ++i;
    }
    out.push_back(ts[best]);
  }
  return out;
}

double brute_silhouette(const std::vector<double>& x, const std::vector<int>& lab) {
  double per[2] = {0, 0};
  int cnt[2] = {0, 0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    double own = 0, other = 0;
    int n_own = 0, n_other = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (i == j) continue;
      if (lab[j] == lab[i]) {
        own += std::abs(x[i] - x[j]);
        ++n_own;
      } else {
        other += std::abs(x[i] - x[j]);
        ++n_other;
      }
    }
    double s = 0;
    if (n_own > 0 && n_other > 0) {
      const double a = own / n_own, b = other / n_other;
      if (std::max(a, b) > 0) s = (b - a) / std::max(a, b);
    }
    per[lab[i]] += s;
    ++cnt[lab[i]];
  }
  return 0.5 * (per[0] / cnt[0] + per[1] / cnt[1]);
}

}  // namespace

TEST_CASE("IPU segmentation splits at gaps of at least 100 ms") {
  ingest::Turn turn{"A", "t1", 0.0, 5.0, 0};
  // gaps 50, 200, 99 and 100 ms between five 0.3 s words
  std::vector<ingest::Word> words;
  double t = 0.1;
  for (double gap : {0.05, 0.2, 0.099, 0.1, 0.0}) {
    words.push_back({"A", t, t + 0.3, "w"});
    t += 0.3 + gap;
  }
  const auto ipus = segment_turn(turn, words);
  REQUIRE(ipus.size() == 3);
  CHECK(ipus[0].start == doctest::Approx(0.1));
  CHECK(ipus[0].end == doctest::Approx(0.75));
  CHECK(ipus[1].start == doctest::Approx(0.95));
  CHECK(ipus[2].start == doctest::Approx(words[4].start));
  CHECK(ipus[2].end == doctest::Approx(words[4].end));

  const auto whole = segment_turn(turn, {});
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].start == 0.0);
  CHECK(whole[0].end == 5.0);
}

TEST_CASE("three energy bursts give three nuclei") {
  const auto w = bursts(1.6, {{0.3, 0.5}, {0.75, 0.4}, {1.2, 0.6}});
  const Ipu ipu{"A", 0.05, 1.5, 0};
  const auto nuclei = detect_syllable_nuclei(w, ipu);
  REQUIRE(nuclei.size() == 3);
  const double centers[] = {0.3, 0.75, 1.2};
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(nuclei[k].time - centers[k]) <= 0.05 + 1e-9);
    CHECK(nuclei[k].energy_ratio > 1.1);
  }
  const auto oracle = oracle_nuclei(w, ipu.start, ipu.end);
  REQUIRE(oracle.size() == nuclei.size());
  for (std::size_t k = 0; k < oracle.size(); ++k) CHECK(nuclei[k].time == doctest::Approx(oracle[k]));
}

TEST_CASE("bursts below a tenth of the IPU maximum are ignored") {
  const auto w = bursts(1.6, {{0.3, 0.5}, {0.75, 0.02}, {1.2, 0.6}});
  const auto nuclei = detect_syllable_nuclei(w, Ipu{"A", 0.05, 1.5, 0});
  CHECK(nuclei.size() == 2);
  const auto silent = detect_syllable_nuclei(bursts(1.0, {}), Ipu{"A", 0.1, 0.9, 0});
  CHECK(silent.size() <= 1);
}

TEST_CASE("nuclei over several IPUs concatenate in order") {
  const auto w = bursts(3.0, {{0.5, 0.5}, {2.2, 0.5}});
  const std::vector<Ipu> ipus{{"A", 0.2, 0.8, 0}, {"A", 1.9, 2.5, 0}};
  const auto nuclei = detect_syllable_nuclei(w, ipus);
  REQUIRE(nuclei.size() == 2);
  CHECK(nuclei[0].time < nuclei[1].time);
}

TEST_CASE("mean cluster silhouette matches the direct formula") {
  SUBCASE("toy") {
    const std::vector<double> x{0.0, 0.2, 0.1, 5.0, 5.5, 4.8};
    const std::vector<int> lab{0, 0, 0, 1, 1, 1};
    CHECK(mean_cluster_silhouette(x, lab) == doctest::Approx(brute_silhouette(x, lab)));
    CHECK(mean_cluster_silhouette(x, lab) > 0.9);
  }
  SUBCASE("random with ties and a singleton") {
    std::mt19937 gen(21);
    std::uniform_int_distribution<int> u(0, 6);
    std::vector<double> x;
    std::vector<int> lab;
    for (int i = 0; i < 40; ++i) {
      x.push_back(u(gen) * 0.5);
      lab.push_back(0);
    }
    x.push_back(1.0);
    lab.push_back(1);
    CHECK(mean_cluster_silhouette(x, lab) == doctest::Approx(brute_silhouette(x, lab)));
    for (int i = 0; i < 30; ++i) {
      x.push_back(u(gen) * 0.7 + 0.3);
      lab.push_back(1);
    }
    CHECK(mean_cluster_silhouette(x, lab) == doctest::Approx(brute_silhouette(x, lab)));
  }
}

TEST_CASE("18 of 100 candidates with distinct quotients are accented") {
  AccentModel m;
  m.centroid0 = Vector::Zero(1);
  m.centroid1 = Vector::Ones(1);
  m.weights = Vector::Ones(1);
  Matrix c(100, 1);
  // q = x / (1 - x) is increasing on (0, 1); shuffle the rows
  std::vector<int> order(100);
  for (int i = 0; i < 100; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), std::mt19937(5));
  for (int i = 0; i < 100; ++i) c(i, 0) = (order[i] + 1) / 202.0;
  const auto acc = classify_accents(m, c);
  int count = 0;
  for (int i = 0; i < 100; ++i) {
    count += acc[i];
    CHECK(acc[i] == (order[i] >= 82));
  }
  CHECK(count == 18);
}

TEST_CASE("10-candidate sort-and-cut") {
  AccentModel m;
  m.centroid0 = Vector::Zero(2);
  m.centroid1 = Vector::Ones(2);
  m.weights = Eigen::Vector2d(1.0, 0.0);
  Matrix c(10, 2);
  const double xs[] = {0.31, 0.05, 0.44, 0.12, 0.27, 0.49, 0.38, 0.09, 0.21, 0.46};
  for (int i = 0; i < 10; ++i) c.row(i) << xs[i], 100.0 * i;  // second column has no weight
  const auto acc = classify_accents(m, c);
  // P82 of ten values sits between the 8th and 9th smallest: the top two win
  for (int i = 0; i < 10; ++i) CHECK(acc[i] == (xs[i] == 0.49 || xs[i] == 0.46));
}

TEST_CASE("quotient with zero accented distance is infinite and accented") {
  AccentModel m;
  m.centroid0 = Vector::Zero(1);
  m.centroid1 = Vector::Ones(1);
  m.weights = Vector::Ones(1);
  Matrix c(3, 1);
  c << 1.0, 0.2, 0.1;
  const Vector q = accent_quotients(m, c);
  CHECK(std::isinf(q[0]));
  const auto acc = classify_accents(m, c);
  CHECK(acc[0]);
  CHECK_FALSE(acc[2]);
}

TEST_CASE("missing features are imputed with the candidate mean") {
  Matrix f(3, 2);
  f << 1.0, NAN, 3.0, 4.0, NAN, 8.0;
  const Matrix g = impute_column_means(f);
  CHECK(g(2, 0) == doctest::Approx(2.0));
  CHECK(g(0, 1) == doctest::Approx(6.0));
  Matrix all_missing = Matrix::Constant(2, 1, NAN);
  CHECK(impute_column_means(all_missing).isZero());
}

TEST_CASE("bootstrap seeds, centroids and weights") {
  std::mt19937 gen(9);
  std::normal_distribution<double> g(0, 1);
  // column 0 separates accented seeds, column 1 is noise
  std::vector<WordSyllables> words;
  std::vector<std::array<double, 2>> rows;
  for (int w = 0; w < 60; ++w) {
    WordSyllables ws;
    const bool long_word = w % 2 == 0;
    ws.duration = long_word ? 0.7 : 0.1;
    for (int s = 0; s < 2; ++s) {
      ws.syllables.push_back(static_cast<Eigen::Index>(rows.size()));
      const bool accented = long_word && s == 0;
      rows.push_back({(accented ? 4.0 : 0.0) + 0.3 * g(gen), g(gen)});
    }
    words.push_back(ws);
  }
  Matrix f(rows.size(), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) f.row(i) << rows[i][0], rows[i][1];
  const auto model = bootstrap_accent_model(f, words);
  CHECK(model.centroid1[0] > 3.5);
  CHECK(std::abs(model.centroid0[0]) < 0.3);
  CHECK(model.weights[0] > 0.7);
  CHECK(model.weights[1] < 0.2);
  CHECK(model.weights.minCoeff() >= 0.0);

  // accented seed rows come out accented
  const auto acc = classify_accents(model, f);
  int hits = 0;
  for (int w = 0; w < 60; w += 2) hits += acc[words[w].syllables.front()];
  CHECK(hits >= 15);

  SUBCASE("empty seed class") {
    std::vector<WordSyllables> only_short;
    for (const auto& w : words)
      if (w.duration < 0.15) only_short.push_back(w);
    CHECK_THROWS_AS(bootstrap_accent_model(f, only_short), Error);
  }
  SUBCASE("no informative feature") {
    const Matrix flat = Matrix::Constant(f.rows(), 2, 1.0);
    CHECK_THROWS_AS(bootstrap_accent_model(flat, words), Error);
  }
}

TEST_CASE("inter-nucleus durations") {
  const std::vector<SyllableNucleus> n{{0.1, 2}, {0.3, 2}, {0.6, 2}};
  const auto d = inter_nucleus_durations(n);
  CHECK(d[0] == doctest::Approx(0.2));
  CHECK(d[1] == doctest::Approx(0.25));
  CHECK(d[2] == doctest::Approx(0.3));
  const std::vector<SyllableNucleus> lone{{0.4, 2}};
  CHECK(std::isnan(inter_nucleus_durations(lone)[0]));
}

TEST_CASE("syllable features on a bump contour") {
  Vector y = Vector::Constant(100, 5.0);
  for (int i = 0; i < 100; ++i) y[i] += 3.0 * std::exp(-std::pow((i - 50) / 6.0, 2));
  const auto c = SampledTrack::all_valid(y, 100.0, Unit::kSemitone, 0.0);
  const auto phrase = styl::fit_register(c);
  REQUIRE(phrase);
  const auto f = syllable_features(c, *phrase, 0.5, 0.3);
  CHECK_FALSE(f.hasNaN());
  CHECK(f[2] < 0.0);
  CHECK(f[10] == 0.3);
  const auto edge = syllable_features(c.slice(0.0, 0.02), *phrase, 0.0, NAN);
  CHECK(std::isnan(edge[0]));
  CHECK(std::isnan(edge[4]));
}
