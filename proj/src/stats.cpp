// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include "prosync/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "prosync/svg.hpp"

namespace prosync::stats {

namespace {

using features::format_number;

// Nelder-Mead minimization in one or two dimensions.
Vector nelder_mead(const std::function<double(const Vector&)>& f, Vector start, double step,
                   int max_iter = 400, double tol = 1e-10) {
  const Eigen::Index d = start.size();
  std::vector<Vector> pts{start};
  for (Eigen::Index i = 0; i < d; ++i) {
    Vector p = start;
    p[i] += step;
    pts.push_back(p);
  }
  std::vector<double> vals;
  for (const auto& p : pts) vals.push_back(f(p));
  std::vector<std::size_t> order(pts.size());
  for (int iter = 0; iter < max_iter; ++iter) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const auto best = order.front(), worst = order.back(), second = order[order.size() - 2];
    if (std::abs(vals[worst] - vals[best]) <= tol * (1.0 + std::abs(vals[best]))) break;
    Vector centroid = Vector::Zero(d);
    for (auto i : order)
      if (i != worst) centroid += pts[i];
    centroid /= static_cast<double>(d);
    const Vector reflected = centroid + (centroid - pts[worst]);
    const double fr = f(reflected);
    if (fr < vals[best]) {
      const Vector expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = f(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
    } else if (fr < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = fr;
    } else {
      const Vector contracted = centroid + 0.5 * (pts[worst] - centroid);
      const double fc = f(contracted);
      if (fc < vals[worst]) {
        pts[worst] = contracted;
        vals[worst] = fc;
      } else {
        for (auto i : order) {
          if (i == best) continue;
          pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
          vals[i] = f(pts[i]);
        }
      }
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  return pts[static_cast<std::size_t>(it - vals.begin())];
}

std::string type_label(char role, char gender) { return std::string(1, role) + "_" + gender; }

// Compact 0-based level indices.
std::vector<int> compact(std::vector<int> g) {
  std::map<int, int> remap;
  for (int v : g) remap.emplace(v, 0);
  int next = 0;
  for (auto& [k, v] : remap) v = next++;
  for (int& v : g) v = remap[v];
  return g;
}

struct Design {
  Matrix x;
  std::vector<std::string> names;
};

// Effect-coded pairing * role * gender design with aliased columns dropped
// in order.
Design build_design(std::span<const Observation> obs) {
  const auto n = static_cast<Eigen::Index>(obs.size());
  const std::array<const char*, 8> names = {"1", "P", "R", "G", "PR", "PG", "RG", "PRG"};
  Matrix full(n, 8);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = obs[static_cast<std::size_t>(i)];
    const double p = o.paired ? 0.5 : -0.5;
    const double r = o.role == Role::kDescriber ? 0.5 : -0.5;
    const double g = o.gender == Gender::kFemale ? 0.5 : -0.5;
    full.row(i) << 1.0, p, r, g, p * r, p * g, r * g, p * r * g;
  }
  Design d;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < 8; ++c) {
    keep.push_back(c);
    const Matrix trial = full(Eigen::all, keep);
    Eigen::ColPivHouseholderQR<Matrix> qr(trial);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(keep.size())) keep.pop_back();
  }
  d.x = full(Eigen::all, keep);
  for (auto c : keep) d.names.push_back(names[static_cast<std::size_t>(c)]);
  return d;
}

std::optional<PairingTest> fit_pairing(std::span<const Observation> obs, const std::string& label,
                                       num::Rng& rng, const TestParams& params) {
  std::size_t paired = 0;
  for (const auto& o : obs) paired += o.paired;
  if (paired == 0 || paired == obs.size()) return std::nullopt;
  const Design design = build_design(obs);
  const auto col = [&](const char* name) -> std::optional<Eigen::Index> {
    const auto it = std::find(design.names.begin(), design.names.end(), name);
    if (it == design.names.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - design.names.begin());
  };
  const auto p_col = col("P");
  if (!p_col) return std::nullopt;

  PairingTest test;
  test.speaker_type = label;
  test.n = obs.size();
  const bool enough = static_cast<Eigen::Index>(obs.size()) > design.x.cols() + 1;
  if (enough) {
    Vector y(static_cast<Eigen::Index>(obs.size()));
    std::vector<int> g1, g2;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      y[static_cast<Eigen::Index>(i)] = obs[i].y;
      g1.push_back(obs[i].initiator);
      g2.push_back(obs[i].responder);
    }
    try {
      const MixedModel model(std::move(y), design.x, compact(std::move(g1)), compact(std::move(g2)));
      const MixedFit fit = model.fit();
      if (fit.p.allFinite() && fit.se.allFinite()) {
        test.estimate = fit.beta[*p_col];
        test.se = fit.se[*p_col];
        test.p = fit.p[*p_col];
        if (auto c = col("PR")) test.p_role_interaction = fit.p[*c];
        if (auto c = col("PG")) test.p_gender_interaction = fit.p[*c];
        if (auto c = col("PRG")) test.p_three_way = fit.p[*c];
        return test;
      }
    } catch (const Error&) {
      // singular system: fall through to the permutation test
    }
  }
  auto perm = permutation_test(obs, rng, params.permutations);
  perm.speaker_type = label;
  return perm;
}

bool significant(const Nullable& p, double alpha) { return p && *p < alpha; }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

// Mixed model ---------------------------------------------------------------------

MixedModel::MixedModel(Vector y, Matrix x, std::vector<int> g1, std::vector<int> g2)
    : y_(std::move(y)), x_(std::move(x)), g1_(std::move(g1)), g2_(std::move(g2)) {
  const auto n = y_.size();
  if (x_.rows() != n || static_cast<Eigen::Index>(g1_.size()) != n ||
      static_cast<Eigen::Index>(g2_.size()) != n)
    throw Error("mixed model: inconsistent dimensions");
  if (n <= x_.cols()) throw Error("mixed model: not enough observations");
  for (int v : g1_) q1_ = std::max(q1_, v + 1);
  for (int v : g2_) q2_ = std::max(q2_, v + 1);
  const int q = q1_ + q2_;
  ztz_ = Matrix::Zero(q, q);
  ztx_ = Matrix::Zero(q, x_.cols());
  zty_ = Vector::Zero(q);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = g1_[static_cast<std::size_t>(i)], b = q1_ + g2_[static_cast<std::size_t>(i)];
    ztz_(a, a) += 1;
    ztz_(b, b) += 1;
    ztz_(a, b) += 1;
    ztz_(b, a) += 1;
    ztx_.row(a) += x_.row(i);
    ztx_.row(b) += x_.row(i);
    zty_[a] += y_[i];
    zty_[b] += y_[i];
  }
  xtx_ = x_.transpose() * x_;
  xty_ = x_.transpose() * y_;
}

MixedModel::Solution MixedModel::solve(const Eigen::Vector2d& theta) const {
  const int q = q1_ + q2_;
  Vector lam(q);
  lam.head(q1_).setConstant(std::abs(theta[0]));
  lam.tail(q2_).setConstant(std::abs(theta[1]));
  const Matrix a = lam.asDiagonal() * ztz_ * lam.asDiagonal() + Matrix::Identity(q, q);
  const Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw Error("mixed model: random-effect system not positive definite");
  const auto l = llt.matrixL();
  const Vector cu = l.solve(lam.cwiseProduct(zty_));
  const Matrix rzx = l.solve(lam.asDiagonal() * ztx_);
  Solution s;
  s.xtx_schur = xtx_ - rzx.transpose() * rzx;
  const Eigen::LLT<Matrix> lx(s.xtx_schur);
  if (lx.info() != Eigen::Success) throw Error("mixed model: fixed-effect system singular");
  s.beta = lx.solve(xty_ - rzx.transpose() * cu);
  const Vector u = llt.matrixU().solve(cu - rzx * s.beta);
  double rss = 0.0;
  for (Eigen::Index i = 0; i < y_.size(); ++i) {
    const int ga = g1_[static_cast<std::size_t>(i)], gb = q1_ + g2_[static_cast<std::size_t>(i)];
    const double r = y_[i] - x_.row(i).dot(s.beta) - lam[ga] * u[ga] - lam[gb] * u[gb];
    rss += r * r;
  }
  s.prss = rss + u.squaredNorm();
  s.logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return s;
}

double MixedModel::deviance(const Eigen::Vector2d& theta) const {
  const auto s = solve(theta);
  const auto n = static_cast<double>(y_.size());
  if (!(s.prss > 0.0)) return -std::numeric_limits<double>::infinity();
  return s.logdet + n * (1.0 + std::log(2.0 * std::numbers::pi * s.prss / n));
}

MixedFit MixedModel::fit_at(const Eigen::Vector2d& theta) const {
  const auto s = solve(theta);
  MixedFit fit;
  fit.theta = theta.cwiseAbs();
  fit.beta = s.beta;
  fit.dof = static_cast<int>(y_.size() - x_.cols());
  fit.sigma2 = s.prss / fit.dof;
  const auto n = static_cast<double>(y_.size());
  fit.deviance = s.logdet + n * (1.0 + std::log(2.0 * std::numbers::pi * s.prss / n));
  const Matrix cov = fit.sigma2 * s.xtx_schur.inverse();
  fit.se = cov.diagonal().cwiseSqrt();
  fit.t = fit.beta.cwiseQuotient(fit.se);
  fit.p.resize(fit.t.size());
  for (Eigen::Index i = 0; i < fit.t.size(); ++i)
    fit.p[i] = num::student_t_two_sided_p(fit.t[i], fit.dof);
  return fit;
}

MixedFit MixedModel::fit() const {
  const auto dev2 = [&](const Vector& t) { return deviance(Eigen::Vector2d(t[0], t[1])); };
  std::vector<Eigen::Vector2d> candidates{Eigen::Vector2d::Zero()};
  const Vector both = nelder_mead(dev2, Vector::Constant(2, 0.5), 0.4);
  candidates.emplace_back(both[0], both[1]);
  const Vector only2 = nelder_mead([&](const Vector& t) { return deviance({0.0, t[0]}); },
                                   Vector::Constant(1, 0.5), 0.4);
  candidates.emplace_back(0.0, only2[0]);
  const Vector only1 = nelder_mead([&](const Vector& t) { return deviance({t[0], 0.0}); },
                                   Vector::Constant(1, 0.5), 0.4);
  candidates.emplace_back(only1[0], 0.0);
  Eigen::Vector2d best = candidates.front();
  double best_dev = deviance(best);
  for (const auto& c : candidates) {
    const double d = deviance(c);
    if (d < best_dev - 1e-12) {
      best = c;
      best_dev = d;
    }
  }
  return fit_at(best);
}

// Pairing tests ---------------------------------------------------------------------

PairingTest permutation_test(std::span<const Observation> obs, num::Rng& rng, int permutations) {
  PairingTest test;
  test.permutation = true;
  test.n = obs.size();
  test.se = std::numeric_limits<double>::quiet_NaN();
  std::vector<bool> labels;
  for (const auto& o : obs) labels.push_back(o.paired);
  const auto stat = [&](const std::vector<bool>& lab) {
    double s1 = 0, s0 = 0;
    int n1 = 0, n0 = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      if (lab[i]) {
        s1 += obs[i].y;
        ++n1;
      } else {
        s0 += obs[i].y;
        ++n0;
      }
    }
    return (n1 ? s1 / n1 : 0.0) - (n0 ? s0 / n0 : 0.0);
  };
  test.estimate = stat(labels);
  std::map<int, std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < obs.size(); ++i) clusters[obs[i].responder].push_back(i);
  int extreme = 0;
  std::vector<bool> perm = labels;
  for (int b = 0; b < permutations; ++b) {
    for (const auto& [id, idx] : clusters) {
      for (std::size_t k = idx.size(); k > 1; --k) {
        const std::size_t j = static_cast<std::size_t>(rng.below(k));
        const bool tmp = perm[idx[k - 1]];
        perm[idx[k - 1]] = perm[idx[j]];
        perm[idx[j]] = tmp;
      }
    }
    if (std::abs(stat(perm)) >= std::abs(test.estimate) - 1e-12) ++extreme;
  }
  test.p = (1.0 + extreme) / (1.0 + permutations);
  return test;
}

std::vector<PairingTest> test_pairing(std::span<const Observation> obs, num::Rng& rng,
                                      const TestParams& params) {
  std::vector<PairingTest> out;
  std::set<std::string> done;
  const auto subset = [&](char role, char gender) {
    std::vector<Observation> s;
    for (const auto& o : obs) {
      if (role != 'x' && role_code(o.role) != role) continue;
      if (gender != 'x' && gender_code(o.gender) != gender) continue;
      s.push_back(o);
    }
    return s;
  };
  std::function<void(char, char)> visit = [&](char role, char gender) {
    const auto label = type_label(role, gender);
    if (!done.insert(label).second) return;
    const auto s = subset(role, gender);
    const auto t = fit_pairing(s, label, rng, params);
    if (!t) return;
    out.push_back(*t);
    if (role == 'x' && gender == 'x' && significant(t->p_three_way, params.alpha)) {
      for (char r : {'d', 'f'})
        for (char g : {'f', 'm'}) visit(r, g);
    }
    if (role == 'x' && significant(t->p_role_interaction, params.alpha))
      for (char r : {'d', 'f'}) visit(r, gender);
    if (gender == 'x' && significant(t->p_gender_interaction, params.alpha))
      for (char g : {'f', 'm'}) visit(role, g);
  };
  visit('x', 'x');
  return out;
}

std::vector<double> fdr_correct(std::span<const double> p) {
  const std::size_t m = p.size();
  std::vector<double> out(m);
  if (m == 0) return out;
  double c = 0.0;
  for (std::size_t i = 1; i <= m; ++i) c += 1.0 / static_cast<double>(i);
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const double adj = static_cast<double>(m) * c * p[order[k]] / static_cast<double>(k + 1);
    running = std::min(running, adj);
    out[order[k]] = std::min(1.0, running);
  }
  return out;
}

const char* level_name(Level l) { return l == Level::kLocal ? "local" : "global"; }

std::vector<TestResult> run_level_tests(std::span<const entrain::DistanceRecord> records,
                                        Level level, num::Rng& rng, const TestParams& params) {
  using entrain::Condition;
  const Condition yes = level == Level::kLocal ? Condition::kAdjacent : Condition::kSameDialog;
  const Condition no = level == Level::kLocal ? Condition::kNonAdjacent : Condition::kDifferentDialog;
  std::map<std::string, int> speakers;
  for (const auto& r : records) {
    speakers.emplace(r.initiator, 0);
    speakers.emplace(r.responder, 0);
  }
  int next = 0;
  for (auto& [k, v] : speakers) v = next++;

  std::vector<TestResult> results;
  std::vector<Observation> obs;
  for (int f = 0; f < features::kFeatureCount; ++f) {
    for (int m = 0; m < 2; ++m) {
      const auto measure = static_cast<entrain::Measure>(m);
      obs.clear();
      for (const auto& r : records) {
        if (r.pair.condition != yes && r.pair.condition != no) continue;
        const auto& v = r.values(measure)[f];
        if (!v) continue;
        obs.push_back({*v, r.pair.condition == yes, r.role, r.gender, speakers[r.initiator],
                       speakers[r.responder]});
      }
      num::Rng sub = rng.fork(static_cast<std::uint64_t>(2 * f + m));
      for (auto& t : test_pairing(obs, sub, params)) {
        TestResult res;
        res.feature = features::feature_names()[f];
        res.level = level;
        res.measure = measure;
        res.test = std::move(t);
        results.push_back(std::move(res));
      }
    }
  }
  std::vector<double> p;
  for (const auto& r : results) p.push_back(r.test.p);
  const auto adj = fdr_correct(p);
  for (std::size_t i = 0; i < results.size(); ++i) results[i].p_adjusted = adj[i];
  return results;
}

void write_tests_csv(std::ostream& os, std::span<const TestResult> results) {
  os << "level,feature,measure,speaker_type,n,estimate,se,p,p_adjusted,method,p_pairing_role,"
        "p_pairing_gender,p_pairing_role_gender\n";
  const auto opt = [](const Nullable& v) { return v ? format_number(*v) : std::string(); };
  for (const auto& r : results) {
    os << level_name(r.level) << ',' << r.feature << ',' << entrain::measure_name(r.measure) << ','
       << r.test.speaker_type << ',' << r.test.n << ',' << format_number(r.test.estimate) << ','
       << (std::isfinite(r.test.se) ? format_number(r.test.se) : "") << ','
       << format_number(r.test.p) << ',' << format_number(r.p_adjusted) << ','
       << (r.test.permutation ? "permutation" : "mixed") << ',' << opt(r.test.p_role_interaction)
       << ',' << opt(r.test.p_gender_interaction) << ',' << opt(r.test.p_three_way) << '\n';
  }
}

// Harvest ---------------------------------------------------------------------------

HarvestTable harvest(std::span<const TestResult> results, double alpha) {
  HarvestTable table;
  const auto& names = features::feature_names();
  const auto& sets = features::feature_sets();
  for (int f = 0; f < features::kFeatureCount; ++f)
    table.push_back({sets[f], names[f].substr(sets[f].size() + 1), {}});
  for (const auto& r : results) {
    if (!(r.p_adjusted < alpha)) continue;
    const int f = features::feature_index(r.feature);
    const int col = static_cast<int>(r.measure) + (r.entrain() ? 0 : 2);
    auto& cell = table[static_cast<std::size_t>(f)].columns[static_cast<std::size_t>(col)];
    if (std::find(cell.begin(), cell.end(), r.test.speaker_type) == cell.end())
      cell.push_back(r.test.speaker_type);
  }
  for (auto& row : table) {
    for (auto& cell : row.columns) {
      std::sort(cell.begin(), cell.end(), [](const std::string& a, const std::string& b) {
        const auto ia = std::find(kSpeakerTypes.begin(), kSpeakerTypes.end(), a);
        const auto ib = std::find(kSpeakerTypes.begin(), kSpeakerTypes.end(), b);
        return ia < ib;
      });
    }
  }
  return table;
}

void write_harvest_csv(std::ostream& os, const HarvestTable& table) {
  os << "row,set,name,prox,sync,-prox,-sync\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    os << i + 1 << ',' << table[i].set << ',' << table[i].name;
    for (const auto& cell : table[i].columns) {
      os << ',';
      if (cell.empty()) {
        os << "--";
      } else {
        for (std::size_t k = 0; k < cell.size(); ++k) os << (k ? ";" : "") << cell[k];
      }
    }
    os << '\n';
  }
}

HarvestTable read_harvest_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "row,set,name,prox,sync,-prox,-sync")
    throw ParseError(ParseError::Kind::kMalformedHeader, "harvest csv: bad header");
  HarvestTable table;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) throw ParseError(ParseError::Kind::kSyntax, "harvest csv: need 7 fields");
    HarvestRow row;
    row.set = f[1];
    row.name = f[2];
    if (const auto pos = row.name.find(".rms"); pos != std::string::npos) row.name.erase(pos, 4);
    features::feature_index(row.set + "." + row.name);  // validates the name
    for (int c = 0; c < 4; ++c) {
      const auto& cell = f[static_cast<std::size_t>(3 + c)];
      if (cell == "--" || cell.empty()) continue;
      for (const auto& t : split(cell, ';')) {
        if (std::find(kSpeakerTypes.begin(), kSpeakerTypes.end(), t) == kSpeakerTypes.end())
          throw ParseError(ParseError::Kind::kSyntax, "harvest csv: unknown speaker type " + t);
        row.columns[static_cast<std::size_t>(c)].push_back(t);
      }
    }
    table.push_back(std::move(row));
  }
  return table;
}

// Condensation ----------------------------------------------------------------------

const char* grouping_name(Grouping g) {
  switch (g) {
    case Grouping::kFeatureSet: return "feature_set";
    case Grouping::kPosition: return "position";
    case Grouping::kSpeakerType: return "speaker_type";
  }
  return "";
}

std::vector<Condensed> condense(const HarvestTable& table, Grouping grouping) {
  std::vector<Condensed> out;
  const auto emit = [&](const std::string& group, const std::vector<const HarvestRow*>& rows,
                        const std::function<bool(const std::vector<std::string>&)>& evidence) {
    for (int c = 0; c < 4; ++c) {
      Condensed x;
      x.group = group;
      x.column = kColumns[static_cast<std::size_t>(c)];
      x.total = static_cast<int>(rows.size());
      for (const auto* r : rows) x.count += evidence(r->columns[static_cast<std::size_t>(c)]);
      if (x.total > 0) x.probability = static_cast<double>(x.count) / x.total;
      out.push_back(x);
    }
  };
  const auto nonempty = [](const std::vector<std::string>& cell) { return !cell.empty(); };
  switch (grouping) {
    case Grouping::kFeatureSet:
      for (const char* set : {"gnl_en", "gnl_f0", "phrase", "acc", "rhy_en", "rhy_f0"}) {
        std::vector<const HarvestRow*> rows;
        for (const auto& r : table)
          if (r.set == set) rows.push_back(&r);
        emit(set, rows, nonempty);
      }
      break;
    case Grouping::kPosition:
      for (const char* pos : {"F", "L"}) {
        const std::string suffix = std::string(".") + pos;
        std::vector<const HarvestRow*> rows;
        for (const auto& r : table)
          if ((r.set == "phrase" || r.set == "acc") && r.name.size() > 2 &&
              r.name.compare(r.name.size() - 2, 2, suffix) == 0)
            rows.push_back(&r);
        emit(pos, rows, nonempty);
      }
      break;
    case Grouping::kSpeakerType: {
      std::vector<const HarvestRow*> rows;
      for (const auto& r : table) rows.push_back(&r);
      for (const char* type : kSpeakerTypes) {
        emit(type, rows, [&](const std::vector<std::string>& cell) {
          return std::find(cell.begin(), cell.end(), type) != cell.end();
        });
      }
      break;
    }
  }
  return out;
}

void write_condense_csv(std::ostream& os, std::span<const Condensed> local,
                        std::span<const Condensed> global) {
  os << "level,group,column,count,total,probability\n";
  const auto rows = [&](const char* level, std::span<const Condensed> v) {
    for (const auto& c : v) {
      os << level << ',' << c.group << ',' << c.column << ',' << c.count << ',' << c.total << ',';
      if (c.probability) os << format_number(*c.probability);
      os << '\n';
    }
  };
  rows("global", global);
  rows("local", local);
}

std::string condense_svg(std::span<const Condensed> global, std::span<const Condensed> local,
                         const std::string& title) {
  std::vector<std::string> groups;
  for (const auto& c : global)
    if (std::find(groups.begin(), groups.end(), c.group) == groups.end()) groups.push_back(c.group);
  const double bar = 26, gap = 12, panel_h = 220, top = 40, left = 50;
  const double panel_w = static_cast<double>(groups.size()) * (bar + gap) + gap;
  svg::Canvas canvas(left + 2 * panel_w + 60, top + panel_h + 80);
  canvas.text(left, 22, title, 13);
  const double unit = panel_h / 4.0;  // four stacked probabilities at most
  for (int panel = 0; panel < 2; ++panel) {
    const auto data = panel == 0 ? global : local;
    const double x0 = left + panel * (panel_w + 40);
    const double base = top + panel_h;
    canvas.line(x0, top, x0, base);
    canvas.line(x0, base, x0 + panel_w, base);
    for (int k = 0; k <= 4; ++k) {
      canvas.line(x0 - 4, base - k * unit, x0, base - k * unit);
      if (panel == 0) canvas.text(x0 - 6, base - k * unit + 4, std::to_string(k), 9, "end");
    }
    canvas.text(x0 + panel_w / 2, base + 44, panel == 0 ? "global" : "local", 11, "middle");
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const double x = x0 + gap + static_cast<double>(g) * (bar + gap);
      double y = base;
      for (std::size_t c = 0; c < kColumns.size(); ++c) {
        for (const auto& d : data) {
          if (d.group != groups[g] || d.column != kColumns[c] || !d.probability) continue;
          const double h = *d.probability * unit;
          canvas.rect(x, y - h, bar, h, svg::color(c));
          y -= h;
        }
      }
      canvas.text(x + bar / 2, base + 14, groups[g], 9, "middle");
    }
  }
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    const double x = left + static_cast<double>(c) * 70;
    canvas.rect(x, top + panel_h + 56, 10, 10, svg::color(c));
    canvas.text(x + 14, top + panel_h + 65, kColumns[c], 10);
  }
  return canvas.str();
}

// Task success ----------------------------------------------------------------------

Nullable smooth_fraction(std::span<const double> latencies, double interval) {
  if (latencies.empty()) return std::nullopt;
  std::size_t smooth = 0;
  for (double l : latencies) smooth += l >= -interval - 1e-12 && l <= interval + 1e-12;
  return static_cast<double>(smooth) / static_cast<double>(latencies.size());
}

std::vector<double> speaker_change_latencies(const ingest::DialogAnnotation& ann,
                                             const std::string& task) {
  std::vector<double> out;
  const ingest::Turn* prev = nullptr;
  for (const auto& t : ann.turns()) {
    if (t.task != task) continue;
    if (prev && prev->speaker != t.speaker) out.push_back(t.start - prev->end);
    prev = &t;
  }
  return out;
}

std::vector<TaskSuccess> task_success(const ingest::DialogAnnotation& ann, double interval) {
  std::vector<TaskSuccess> out;
  for (const auto& task : ann.tasks()) {
    TaskSuccess s;
    s.session = ann.session_id();
    s.task = task.id;
    s.duration = task.end - task.start;
    if (!(s.duration > 0.0)) throw ValidationError("task " + task.id + " has zero duration");
    for (const auto& spk : ann.speakers()) {
      if (spk.id == task.describer) {
        s.describer_gender = spk.gender;
      } else {
        s.follower_gender = spk.gender;
      }
    }
    s.score = task.score;
    s.efficiency = task.score / s.duration;
    const auto lat = speaker_change_latencies(ann, task.id);
    s.smooth = smooth_fraction(lat, interval);
    out.push_back(s);
  }
  return out;
}

void standardize(std::vector<TaskSuccess>& rows) {
  const auto z = [&](auto get, auto set) {
    std::vector<double> v;
    for (const auto& r : rows)
      if (auto x = get(r)) v.push_back(*x);
    if (v.empty()) return;
    const double mu = num::mean(v), sd = num::population_sd(v);
    for (auto& r : rows) {
      const auto x = get(r);
      set(r, x && sd > 0.0 ? Nullable((*x - mu) / sd) : std::nullopt);
    }
  };
  z([](const TaskSuccess& r) { return r.score; }, [](TaskSuccess& r, Nullable v) { r.z_score = v; });
  z([](const TaskSuccess& r) { return Nullable(r.duration); },
    [](TaskSuccess& r, Nullable v) { r.z_duration = v; });
  z([](const TaskSuccess& r) { return r.efficiency; },
    [](TaskSuccess& r, Nullable v) { r.z_efficiency = v; });
  z([](const TaskSuccess& r) { return r.smooth; }, [](TaskSuccess& r, Nullable v) { r.z_smooth = v; });
}

void write_success_csv(std::ostream& os, std::span<const TaskSuccess> rows) {
  os << "session,task,describer_gender,follower_gender,score,duration,efficiency,smooth,z_score,"
        "z_duration,z_efficiency,z_smooth\n";
  const auto opt = [](const Nullable& v) { return v ? format_number(*v) : std::string(); };
  for (const auto& r : rows) {
    os << r.session << ',' << r.task << ',' << gender_code(r.describer_gender) << ','
       << gender_code(r.follower_gender) << ',' << opt(r.score) << ',' << format_number(r.duration)
       << ',' << opt(r.efficiency) << ',' << opt(r.smooth) << ',' << opt(r.z_score) << ','
       << opt(r.z_duration) << ',' << opt(r.z_efficiency) << ',' << opt(r.z_smooth) << '\n';
  }
}

}  // namespace prosync::stats
