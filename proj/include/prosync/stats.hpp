// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

// Harvesting (mixed-model pairing tests with FDR correction), condensation
// into conditional probabilities, and task success measures.

#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prosync/entrain.hpp"
#include "prosync/ingest.hpp"
#include "prosync/numeric.hpp"

namespace prosync::stats {

// Mixed model ---------------------------------------------------------------------

/// Linear model with two crossed random intercepts:
///   y = X b + Z1 u1 + Z2 u2 + e,  u_k ~ N(0, s^2 theta_k^2), e ~ N(0, s^2).
/// theta is estimated by maximum likelihood on the profiled deviance; fixed
/// effects are tested with t statistics on n - p degrees of freedom, which
/// reduces exactly to ordinary least squares when theta = 0.
struct MixedFit {
  Vector beta;
  Vector se;
  Vector t;
  Vector p;
  Eigen::Vector2d theta = Eigen::Vector2d::Zero();
  double sigma2 = 0.0;
  double deviance = 0.0;
  int dof = 0;
};

class MixedModel {
 public:
  /// g1, g2 are 0-based level indices of the two grouping factors.
  MixedModel(Vector y, Matrix x, std::vector<int> g1, std::vector<int> g2);

  /// Profiled ML deviance at theta (absolute values are used).
  double deviance(const Eigen::Vector2d& theta) const;
  MixedFit fit_at(const Eigen::Vector2d& theta) const;
  /// Nelder-Mead search over theta, with boundary candidates.
  MixedFit fit() const;

 private:
  struct Solution {
    Vector beta;
    Matrix xtx_schur;  // X'X - X'Z L^-T L^-1 Z'X, the fixed-effect precision / s^2
    double prss = 0.0;
    double logdet = 0.0;
  };
  Solution solve(const Eigen::Vector2d& theta) const;

  Vector y_;
  Matrix x_;
  std::vector<int> g1_, g2_;
  int q1_ = 0, q2_ = 0;
  Matrix ztz_, ztx_, xtx_;
  Vector zty_, xty_;
};

// Pairing tests ---------------------------------------------------------------------

/// One distance observation for the pairing test.
struct Observation {
  double y = 0.0;
  bool paired = false;  // adjacent / same dialog
  Role role = Role::kDescriber;
  Gender gender = Gender::kFemale;
  int initiator = 0;  // speaker level indices
  int responder = 0;
};

struct PairingTest {
  std::string speaker_type;  // role_gender with x for unspecified
  double estimate = 0.0;     // paired minus unpaired effect
  double se = 0.0;
  double p = 1.0;
  bool permutation = false;  // fallback used
  std::size_t n = 0;
  Nullable p_role_interaction;
  Nullable p_gender_interaction;
  Nullable p_three_way;
};

struct TestParams {
  double alpha = 0.05;
  int permutations = 999;
};

/// Tests the pairing effect on all observations (x_x); significant raw
/// interactions trigger re-tests on role and/or gender subsets, and a
/// significant three-way interaction on all four role-gender cells.
std::vector<PairingTest> test_pairing(std::span<const Observation> obs, num::Rng& rng,
                                      const TestParams& params = {});

/// Clustered permutation test: pairing labels shuffled within responder;
/// statistic is the difference of means.
PairingTest permutation_test(std::span<const Observation> obs, num::Rng& rng, int permutations);

/// Benjamini-Yekutieli step-up adjustment, clipped at 1.
std::vector<double> fdr_correct(std::span<const double> p);

enum class Level { kLocal, kGlobal };
const char* level_name(Level l);

struct TestResult {
  std::string feature;
  Level level = Level::kLocal;
  entrain::Measure measure = entrain::Measure::kProximity;
  PairingTest test;
  double p_adjusted = 1.0;
  bool entrain() const { return test.estimate < 0.0; }
};

/// Runs the pairing tests for every feature and both measures of one level
/// and applies the FDR correction across all of them.
std::vector<TestResult> run_level_tests(std::span<const entrain::DistanceRecord> records,
                                        Level level, num::Rng& rng,
                                        const TestParams& params = {});

void write_tests_csv(std::ostream& os, std::span<const TestResult> results);

// Harvest ---------------------------------------------------------------------------

inline constexpr std::array<const char*, 9> kSpeakerTypes = {"x_x", "x_f", "x_m", "d_x", "d_f",
                                                             "d_m", "f_x", "f_f", "f_m"};
/// Column order: prox, sync, -prox, -sync.
inline constexpr std::array<const char*, 4> kColumns = {"prox", "sync", "-prox", "-sync"};

struct HarvestRow {
  std::string set;
  std::string name;  // feature name without the set prefix
  std::array<std::vector<std::string>, 4> columns;
};
using HarvestTable = std::vector<HarvestRow>;

/// 37 rows; a speaker type enters a column when its adjusted p < alpha, on
/// the entrain side for negative estimates and the disentrain side otherwise.
HarvestTable harvest(std::span<const TestResult> results, double alpha = 0.05);

void write_harvest_csv(std::ostream& os, const HarvestTable& table);
/// Reads the harvest layout; "gst.lev.rms.F" style names are accepted.
HarvestTable read_harvest_csv(std::istream& is);

// Condensation ----------------------------------------------------------------------

enum class Grouping { kFeatureSet, kPosition, kSpeakerType };
const char* grouping_name(Grouping g);

struct Condensed {
  std::string group;
  std::string column;
  int count = 0;
  int total = 0;
  Nullable probability;  // null for an empty group
};

std::vector<Condensed> condense(const HarvestTable& table, Grouping grouping);

void write_condense_csv(std::ostream& os, std::span<const Condensed> local,
                        std::span<const Condensed> global);
/// Stacked bars per group, global panel left and local panel right.
std::string condense_svg(std::span<const Condensed> global, std::span<const Condensed> local,
                         const std::string& title);

// Task success ----------------------------------------------------------------------

struct TaskSuccess {
  std::string session;
  std::string task;
  Gender describer_gender = Gender::kFemale;
  Gender follower_gender = Gender::kFemale;
  Nullable score;
  double duration = 0.0;
  Nullable efficiency;
  Nullable smooth;
  // z-transformed across all tasks of the corpus
  Nullable z_score, z_duration, z_efficiency, z_smooth;
};

/// Fraction of latencies inside [-interval, interval]; null when empty.
Nullable smooth_fraction(std::span<const double> latencies, double interval = 0.5);

/// Speaker-change latencies (next onset minus previous offset) of
/// consecutive turns inside one task.
std::vector<double> speaker_change_latencies(const ingest::DialogAnnotation& ann,
                                             const std::string& task);

/// Per task: duration, efficiency = score / duration, smooth fraction.
/// Throws for a zero-duration task.
std::vector<TaskSuccess> task_success(const ingest::DialogAnnotation& ann, double interval = 0.5);

/// Fills the z_* fields over all rows (population SD; null when SD is 0).
void standardize(std::vector<TaskSuccess>& rows);
void write_success_csv(std::ostream& os, std::span<const TaskSuccess> rows);

}  // namespace prosync::stats
