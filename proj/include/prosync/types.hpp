// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace prosync {

inline constexpr const char* kVersion = "0.1.0";

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// A nullable real. Missing feature values travel as `std::nullopt`, never 0.
using Nullable = std::optional<double>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input rejected by a reader. `kind` lets callers tell failure modes apart.
class ParseError : public Error {
 public:
  enum class Kind { kMalformedHeader, kUnsupportedEncoding, kEmpty, kSyntax, kRate, kOrder };
  ParseError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Structurally valid input that violates a data-model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

enum class Unit { kHertz, kSemitone, kRms };

enum class Gender { kFemale, kMale };
enum class Role { kDescriber, kFollower };

inline char gender_code(Gender g) { return g == Gender::kFemale ? 'f' : 'm'; }
inline char role_code(Role r) { return r == Role::kDescriber ? 'd' : 'f'; }

struct Waveform {
  Vector samples;
  double rate = 0.0;

  double duration() const { return rate > 0 ? static_cast<double>(samples.size()) / rate : 0.0; }
};

/// Uniformly sampled scalar contour. Sample i sits at `start + i / rate`.
struct SampledTrack {
  Vector values;
  Mask valid;
  double rate = 100.0;
  double start = 0.0;
  Unit unit = Unit::kHertz;

  Eigen::Index size() const { return values.size(); }
  double time_of(Eigen::Index i) const { return start + static_cast<double>(i) / rate; }

  /// Index range [first, last) of samples whose time lies in [t0, t1].
  std::pair<Eigen::Index, Eigen::Index> index_range(double t0, double t1) const;

  /// Copy of the samples whose time lies in [t0, t1].
  SampledTrack slice(double t0, double t1) const;

  static SampledTrack all_valid(Vector values, double rate, Unit unit, double start = 0.0);
};

}  // namespace prosync
