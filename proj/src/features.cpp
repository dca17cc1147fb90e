// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include "prosync/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "prosync/dsp.hpp"
#include "prosync/numeric.hpp"

namespace prosync::features {

namespace {

constexpr double kEps = 1e-9;

struct Catalog {
  std::array<std::string, kFeatureCount> names;
  std::array<std::string, kFeatureCount> sets;
};

const Catalog& catalog() {
  static const Catalog c = [] {
    Catalog c;
    int i = 0;
    auto add = [&](const std::string& set, const std::string& name) {
      c.sets[i] = set;
      c.names[i] = set + "." + name;
      ++i;
    };
    for (const char* set : {"gnl_en", "gnl_f0"})
      for (const char* s : {"max", "med", "sd"}) add(set, s);
    for (const char* s : {"lev.c0", "lev.c1", "rng.c0", "rng.c1"})
      for (const char* pos : {".F", ".L"}) add("phrase", std::string(s) + pos);
    for (const char* s : {"c0", "c1", "c2", "c3", "lev.c0", "lev.c1", "rng.c0", "rng.c1", "gst.lev",
                          "gst.rng"})
      for (const char* pos : {".F", ".L"}) add("acc", std::string(s) + pos);
    add("rhy_en", "syl.prop");
    add("rhy_en", "syl.rate");
    add("rhy_f0", "syl.prop");
    return c;
  }();
  return c;
}

constexpr int kPhraseBase = 6;
constexpr int kAccBase = 14;
constexpr int kRhyBase = 34;

const std::array<const char*, 8> kIdentity = {"session", "speaker", "task", "index",
                                              "role",    "gender",  "start", "end"};

GnlStats stats_of(std::vector<double> v) {
  if (v.empty()) return {};
  std::sort(v.begin(), v.end());
  return {v.back(), num::percentile_sorted(v, 50.0), num::population_sd(v)};
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(ParseError::Kind::kSyntax, "features csv: bad number '" + s + "'");
  return v;
}

}  // namespace

const std::array<std::string, kFeatureCount>& feature_names() { return catalog().names; }
const std::array<std::string, kFeatureCount>& feature_sets() { return catalog().sets; }

int feature_index(std::string_view name) {
  const auto& names = feature_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error("unknown feature '" + std::string(name) + "'");
  return static_cast<int>(it - names.begin());
}

bool has_position(int index) { return index >= kPhraseBase && index < kRhyBase; }

GnlStats gnl_stats(const SampledTrack& track, double t0, double t1) {
  const auto [first, last] = track.index_range(t0, t1);
  std::vector<double> v;
  for (Eigen::Index i = first; i < last; ++i)
    if (track.valid[i]) v.push_back(track.values[i]);
  return stats_of(std::move(v));
}

Nullable rhythm_weight(const SampledTrack& contour, double syllable_rate, double band,
                       double cutoff) {
  if (!(syllable_rate > 0.0) || syllable_rate >= cutoff) return std::nullopt;
  std::vector<double> v;
  for (Eigen::Index i = 0; i < contour.size(); ++i)
    if (contour.valid[i]) v.push_back(contour.values[i]);
  if (v.size() < 2) return std::nullopt;
  Vector x = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  x.array() -= x.mean();
  const auto spec = dsp::dct_spectrum(SampledTrack::all_valid(x, contour.rate, contour.unit));
  double num = 0.0, den = 0.0;
  for (Eigen::Index k = 1; k < spec.size(); ++k) {
    const double f = spec.freq_of(k);
    if (f > cutoff + kEps) break;
    const double c = std::abs(spec.coefficients[k]);
    den += c;
    if (f >= syllable_rate - band - kEps && f <= syllable_rate + band + kEps) num += c;
  }
  if (!(den > 0.0)) return std::nullopt;
  return num / den;
}

RhythmFeatures rhythm_features(const SampledTrack& energy, const SampledTrack& f0,
                               std::size_t nucleus_count, double t0, double t1, double band,
                               double cutoff) {
  RhythmFeatures out;
  if (!(t1 > t0)) return out;
  const double rate = static_cast<double>(nucleus_count) / (t1 - t0);
  out.rate = rate;
  if (nucleus_count == 0) return out;
  out.prop_en = rhythm_weight(energy.slice(t0, t1), rate, band, cutoff);
  out.prop_f0 = rhythm_weight(f0.slice(t0, t1), rate, band, cutoff);
  return out;
}

void assemble_turn_features(const TurnAnalysis& a, TurnFeatures& out) {
  out.values.fill(std::nullopt);
  out[0] = a.energy.max;
  out[1] = a.energy.med;
  out[2] = a.energy.sd;
  out[3] = a.f0.max;
  out[4] = a.f0.med;
  out[5] = a.f0.sd;

  // slot = base + 2 * feature + position (0 = F, 1 = L)
  if (!a.phrases.empty()) {
    const std::array<const std::optional<styl::RegisterFit>*, 2> fl = {&a.phrases.front(),
                                                                       &a.phrases.back()};
    for (int pos = 0; pos < 2; ++pos) {
      const auto& fit = *fl[pos];
      if (!fit) continue;
      const double v[4] = {fit->lev_c0, fit->lev_c1, fit->rng_c0, fit->rng_c1};
      for (int f = 0; f < 4; ++f) out[kPhraseBase + 2 * f + pos] = v[f];
    }
  }
  if (!a.accents.empty()) {
    const std::array<const styl::AccentShape*, 2> fl = {&a.accents.front(), &a.accents.back()};
    for (int pos = 0; pos < 2; ++pos) {
      const auto& s = *fl[pos];
      if (s.poly)
        for (int f = 0; f < 4; ++f) out[kAccBase + 2 * f + pos] = (*s.poly)[f];
      if (s.local) {
        const double v[4] = {s.local->lev_c0, s.local->lev_c1, s.local->rng_c0, s.local->rng_c1};
        for (int f = 0; f < 4; ++f) out[kAccBase + 2 * (4 + f) + pos] = v[f];
      }
      if (s.gst) {
        out[kAccBase + 2 * 8 + pos] = s.gst->lev;
        out[kAccBase + 2 * 9 + pos] = s.gst->rng;
      }
    }
  }
  out[kRhyBase] = a.rhythm.prop_en;
  out[kRhyBase + 1] = a.rhythm.rate;
  out[kRhyBase + 2] = a.rhythm.prop_f0;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_features_csv(std::ostream& os, std::span<const TurnFeatures> rows) {
  for (const char* id : kIdentity) os << id << ',';
  const auto& names = feature_names();
  for (int i = 0; i < kFeatureCount; ++i) os << names[i] << (i + 1 < kFeatureCount ? ',' : '\n');
  for (const auto& r : rows) {
    os << r.session << ',' << r.speaker << ',' << r.task << ',' << r.index << ','
       << role_code(r.role) << ',' << gender_code(r.gender) << ',' << format_number(r.start) << ','
       << format_number(r.end) << ',';
    for (int i = 0; i < kFeatureCount; ++i) {
      if (r[i]) os << format_number(*r[i]);
      os << (i + 1 < kFeatureCount ? ',' : '\n');
    }
  }
}

std::vector<TurnFeatures> read_features_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError(ParseError::Kind::kEmpty, "features csv: empty");
  const auto header = split(line, ',');
  const std::size_t width = kIdentity.size() + kFeatureCount;
  if (header.size() != width)
    throw ParseError(ParseError::Kind::kMalformedHeader, "features csv: wrong column count");
  for (std::size_t i = 0; i < kIdentity.size(); ++i)
    if (header[i] != kIdentity[i])
      throw ParseError(ParseError::Kind::kMalformedHeader, "features csv: bad identity column");
  for (int i = 0; i < kFeatureCount; ++i)
    if (header[kIdentity.size() + i] != feature_names()[i])
      throw ParseError(ParseError::Kind::kMalformedHeader, "features csv: bad feature column");

  std::vector<TurnFeatures> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != width)
      throw ParseError(ParseError::Kind::kSyntax, "features csv: wrong field count");
    TurnFeatures r;
    r.session = f[0];
    r.speaker = f[1];
    r.task = f[2];
    r.index = static_cast<int>(parse_double(f[3]));
    r.role = f[4] == "d" ? Role::kDescriber : Role::kFollower;
    r.gender = f[5] == "f" ? Gender::kFemale : Gender::kMale;
    r.start = parse_double(f[6]);
    r.end = parse_double(f[7]);
    for (int i = 0; i < kFeatureCount; ++i) {
      const auto& s = f[kIdentity.size() + i];
      if (!s.empty()) r[i] = parse_double(s);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace prosync::features
