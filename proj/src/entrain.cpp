// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include "prosync/entrain.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "prosync/svg.hpp"

namespace prosync::entrain {

namespace {

constexpr double kEps = 1e-9;
using features::TurnFeatures;

// Uniform draw from `pool`, restricted to entries not in `used` when any
// remain.
std::size_t draw_preferring_unused(const std::vector<std::size_t>& pool,
                                   const std::set<std::size_t>& used, num::Rng& rng) {
  std::vector<std::size_t> fresh;
  for (auto i : pool)
    if (!used.count(i)) fresh.push_back(i);
  const auto& from = fresh.empty() ? pool : fresh;
  return from[rng.below(from.size())];
}

std::set<std::string> speakers_of(std::span<const TurnFeatures> rows,
                                  const std::vector<std::size_t>& session) {
  std::set<std::string> out;
  for (auto i : session) out.insert(rows[i].speaker);
  return out;
}

bool disjoint(const std::set<std::string>& a, const std::set<std::string>& b) {
  for (const auto& s : a)
    if (b.count(s)) return false;
  return true;
}

std::string cell_label(Role role, Gender gender) {
  return std::string("a.") + role_code(role) + "_" + gender_code(gender);
}

}  // namespace

const char* condition_name(Condition c) {
  switch (c) {
    case Condition::kAdjacent: return "adjacent";
    case Condition::kNonAdjacent: return "non_adjacent";
    case Condition::kSameDialog: return "same_dialog";
    case Condition::kDifferentDialog: return "different_dialog";
  }
  return "";
}

const char* measure_name(Measure m) { return m == Measure::kProximity ? "prox" : "sync"; }

std::vector<std::vector<std::size_t>> group_sessions(std::span<const TurnFeatures> rows) {
  std::map<std::string, std::vector<std::size_t>> by_session;
  for (std::size_t i = 0; i < rows.size(); ++i) by_session[rows[i].session].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [id, idx] : by_session) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (rows[a].start != rows[b].start) return rows[a].start < rows[b].start;
      return rows[a].index < rows[b].index;
    });
    out.push_back(std::move(idx));
  }
  return out;
}

std::vector<TurnPair> pair_local(std::span<const TurnFeatures> rows,
                                 std::span<const std::size_t> session, num::Rng& rng,
                                 const PairingParams& params) {
  std::vector<TurnPair> out;
  std::set<std::size_t> used;
  std::vector<std::size_t> pool;
  for (std::size_t k = 0; k < session.size(); ++k) {
    const auto& r = rows[session[k]];
    if (k > 0) {
      const auto& p = rows[session[k - 1]];
      if (p.task == r.task && p.speaker != r.speaker)
        out.push_back({Condition::kAdjacent, session[k - 1], session[k]});
    }
    pool.clear();
    for (std::size_t j = 0; j < k; ++j) {
      const auto& p = rows[session[j]];
      if (p.task == r.task && p.speaker != r.speaker &&
          r.start - p.start >= params.min_inter_onset - kEps)
        pool.push_back(session[j]);
    }
    if (pool.empty()) continue;
    const auto pick = draw_preferring_unused(pool, used, rng);
    used.insert(pick);
    out.push_back({Condition::kNonAdjacent, pick, session[k]});
  }
  return out;
}

std::vector<TurnPair> pair_global(std::span<const TurnFeatures> rows, num::Rng& rng) {
  const auto sessions = group_sessions(rows);
  std::vector<std::set<std::string>> speakers;
  for (const auto& s : sessions) speakers.push_back(speakers_of(rows, s));
  std::vector<std::vector<std::size_t>> partners(sessions.size());
  std::vector<std::size_t> with_partner;
  for (std::size_t a = 0; a < sessions.size(); ++a) {
    for (std::size_t b = 0; b < sessions.size(); ++b)
      if (a != b && disjoint(speakers[a], speakers[b])) partners[a].push_back(b);
    if (!partners[a].empty()) with_partner.push_back(a);
  }
  if (with_partner.empty())
    throw Error("global pairing: the corpus has no two dialogs with disjoint speaker pairs");

  std::vector<TurnPair> same;
  std::vector<std::size_t> pool;
  for (const auto& s : sessions) {
    std::set<std::size_t> used;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const auto& r = rows[s[k]];
      pool.clear();
      for (std::size_t j = 0; j < k; ++j) {
        const auto& p = rows[s[j]];
        if (p.task == r.task && p.speaker != r.speaker) pool.push_back(s[j]);
      }
      if (pool.empty()) continue;
      const auto pick = draw_preferring_unused(pool, used, rng);
      used.insert(pick);
      same.push_back({Condition::kSameDialog, pick, s[k]});
    }
  }

  // Session of each row, for the responder's partner lookup.
  std::vector<std::size_t> session_of(rows.size());
  for (std::size_t si = 0; si < sessions.size(); ++si)
    for (auto i : sessions[si]) session_of[i] = si;

  std::vector<TurnPair> out = same;
  for (const auto& p : same) {
    std::size_t responder = p.responder;
    std::size_t home = session_of[responder];
    if (partners[home].empty()) {
      home = with_partner[rng.below(with_partner.size())];
      responder = sessions[home][rng.below(sessions[home].size())];
    }
    const auto& other = sessions[partners[home][rng.below(partners[home].size())]];
    out.push_back({Condition::kDifferentDialog, other[rng.below(other.size())], responder});
  }
  return out;
}

SpeakerMeans speaker_means(std::span<const TurnFeatures> rows) {
  std::map<std::pair<std::string, std::string>, std::array<std::pair<double, int>, features::kFeatureCount>>
      sums;
  for (const auto& r : rows) {
    auto& acc = sums[{r.session, r.speaker}];
    for (int f = 0; f < features::kFeatureCount; ++f) {
      if (!r[f]) continue;
      acc[f].first += *r[f];
      acc[f].second += 1;
    }
  }
  SpeakerMeans out;
  for (const auto& [key, acc] : sums) {
    FeatureValues m;
    for (int f = 0; f < features::kFeatureCount; ++f)
      if (acc[f].second > 0) m[f] = acc[f].first / acc[f].second;
    out[key] = m;
  }
  return out;
}

DistanceRecord distances(const TurnPair& pair, const TurnFeatures& initiator,
                         const TurnFeatures& responder, const FeatureValues& m1,
                         const FeatureValues& m2) {
  DistanceRecord rec;
  rec.pair = pair;
  rec.session = responder.session;
  rec.responder = responder.speaker;
  rec.initiator = initiator.speaker;
  rec.role = responder.role;
  rec.gender = responder.gender;
  for (int f = 0; f < features::kFeatureCount; ++f) {
    const auto& x1 = initiator[f];
    const auto& x2 = responder[f];
    if (!x1 || !x2) continue;
    rec.proximity[f] = std::abs(*x2 - *x1);
    if (m1[f] && m2[f]) rec.synchrony[f] = std::abs((*x2 - *m2[f]) - (*x1 - *m1[f]));
  }
  return rec;
}

std::vector<DistanceRecord> distances(std::span<const TurnPair> pairs,
                                      std::span<const TurnFeatures> rows,
                                      const SpeakerMeans& means) {
  std::vector<DistanceRecord> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto& a = rows[p.initiator];
    const auto& b = rows[p.responder];
    out.push_back(distances(p, a, b, means.at({a.session, a.speaker}),
                            means.at({b.session, b.speaker})));
  }
  return out;
}

std::vector<std::string> profile_conditions() {
  return {"a", "a.d_f", "a.d_m", "a.f_f", "a.f_m", "na", "sd", "u"};
}

std::vector<ProfileCell> build_profile(std::span<const DistanceRecord> records) {
  const auto conditions = profile_conditions();
  const auto slot = [&](const std::string& c) {
    return static_cast<std::size_t>(std::find(conditions.begin(), conditions.end(), c) -
                                    conditions.begin());
  };
  // sums[feature][measure][condition]
  std::vector<std::array<std::vector<std::pair<double, std::size_t>>, 2>> sums(
      features::kFeatureCount);
  for (auto& f : sums)
    for (auto& m : f) m.assign(conditions.size(), {0.0, 0});
  for (const auto& r : records) {
    std::vector<std::size_t> cells;
    switch (r.pair.condition) {
      case Condition::kAdjacent:
        cells = {slot("a"), slot(cell_label(r.role, r.gender))};
        break;
      case Condition::kNonAdjacent: cells = {slot("na")}; break;
      case Condition::kSameDialog: cells = {slot("sd")}; break;
      case Condition::kDifferentDialog: cells = {slot("u")}; break;
    }
    for (int f = 0; f < features::kFeatureCount; ++f) {
      for (int m = 0; m < 2; ++m) {
        const auto& v = r.values(static_cast<Measure>(m))[f];
        if (!v) continue;
        for (auto c : cells) {
          sums[f][m][c].first += *v;
          sums[f][m][c].second += 1;
        }
      }
    }
  }
  std::vector<ProfileCell> out;
  for (int f = 0; f < features::kFeatureCount; ++f) {
    for (int m = 0; m < 2; ++m) {
      for (std::size_t c = 0; c < conditions.size(); ++c) {
        ProfileCell cell;
        cell.feature = features::feature_names()[f];
        cell.measure = static_cast<Measure>(m);
        cell.condition = conditions[c];
        cell.count = sums[f][m][c].second;
        if (cell.count > 0) cell.mean = sums[f][m][c].first / static_cast<double>(cell.count);
        out.push_back(std::move(cell));
      }
    }
  }
  return out;
}

void write_profiles_csv(std::ostream& os, std::span<const ProfileCell> cells) {
  os << "feature,measure,condition,mean,count\n";
  for (const auto& c : cells) {
    os << c.feature << ',' << measure_name(c.measure) << ',' << c.condition << ',';
    if (c.mean) os << features::format_number(*c.mean);
    os << ',' << c.count << '\n';
  }
}

std::string profile_svg(std::span<const ProfileCell> cells, const std::string& feature_set) {
  std::vector<std::string> feats;
  const auto& names = features::feature_names();
  const auto& sets = features::feature_sets();
  for (int f = 0; f < features::kFeatureCount; ++f)
    if (sets[f] == feature_set) feats.push_back(names[f]);
  const auto conditions = profile_conditions();

  const double left = 130, panel_w = 260, gap = 40, top = 40, row_h = 22;
  const double height = top + row_h * static_cast<double>(feats.size()) + 70;
  svg::Canvas canvas(left + 2 * panel_w + gap + 20, height);
  canvas.text(left, 20, "profile " + feature_set, 13);

  for (int m = 0; m < 2; ++m) {
    const auto measure = static_cast<Measure>(m);
    const double x0 = left + m * (panel_w + gap);
    double max_mean = 0.0;
    for (const auto& c : cells)
      if (c.measure == measure && c.mean &&
          std::find(feats.begin(), feats.end(), c.feature) != feats.end())
        max_mean = std::max(max_mean, *c.mean);
    if (max_mean <= 0.0) max_mean = 1.0;
    const double y_end = top + row_h * static_cast<double>(feats.size());
    canvas.line(x0, top - 5, x0, y_end);
    canvas.line(x0, y_end, x0 + panel_w, y_end);
    canvas.text(x0 + panel_w / 2, y_end + 18, std::string(measure_name(measure)) + " distance", 11,
                "middle");
    canvas.text(x0 + panel_w, y_end + 18, svg::num(max_mean, 3), 9, "end");
    for (std::size_t r = 0; r < feats.size(); ++r) {
      const double y = top + row_h * (static_cast<double>(r) + 0.5);
      if (m == 0) canvas.text(left - 8, y + 4, feats[r], 10, "end");
      canvas.line(x0, y, x0 + panel_w, y, "#eee", 0.5);
    }
    for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
      std::vector<std::pair<double, double>> pts;
      for (std::size_t r = 0; r < feats.size(); ++r) {
        for (const auto& c : cells) {
          if (c.measure != measure || c.feature != feats[r] || c.condition != conditions[ci] ||
              !c.mean)
            continue;
          const double x = x0 + panel_w * (*c.mean / max_mean);
          const double y = top + row_h * (static_cast<double>(r) + 0.5);
          pts.emplace_back(x, y);
          canvas.circle(x, y, 2.0, svg::color(ci));
        }
      }
      canvas.polyline(pts, svg::color(ci), ci == 0 || ci >= 5 ? 1.8 : 0.8);
    }
  }
  for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
    const double x = left + static_cast<double>(ci) * 60;
    canvas.rect(x, height - 22, 10, 10, svg::color(ci));
    canvas.text(x + 14, height - 13, conditions[ci], 10);
  }
  return canvas.str();
}

}  // namespace prosync::entrain
