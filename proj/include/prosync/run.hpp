// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

// End-to-end orchestration: run configuration, the analysis run over a
// corpus manifest and the synthetic corpus writer.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "prosync/entrain.hpp"
#include "prosync/pipeline.hpp"
#include "prosync/stats.hpp"
#include "prosync/synthgen.hpp"

namespace prosync::run {

/// Flat `key = value` configuration; `#` starts a comment. Relative paths
/// resolve against the directory of the config file.
struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path output = "out";
  std::uint64_t seed = 1;

  // stage toggles
  bool stage_entrain = true;
  bool stage_stats = true;
  bool stage_success = true;
  bool stage_plots = true;
  bool dump_nuclei = false;

  pipeline::AnalysisParams analysis;
  entrain::PairingParams pairing;
  stats::TestParams tests;
  double smooth_interval = 0.5;

  synthgen::SynthConfig synth;
  std::filesystem::path synth_output = "corpus";

  /// Throws ValidationError for non-positive durations or a percentile
  /// outside (50, 100).
  void validate() const;
  /// Every parameter as `key = value` lines, in a fixed order.
  std::string describe() const;
};

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

enum class LogLevel { kQuiet, kInfo, kDebug };
/// Reads PROSYNC_LOG (quiet, info, debug); info when unset.
LogLevel log_level_from_env();

struct Logger {
  LogLevel level = LogLevel::kInfo;
  std::ostream* out = nullptr;
  void info(const std::string& msg) const;
  void debug(const std::string& msg) const;
};

struct RunReport {
  std::size_t sessions = 0;  // analysed successfully
  std::size_t turns = 0;
  std::vector<std::string> errors;  // per-session failures
};

/// Runs every enabled stage and writes the artifacts into `cfg.output`.
/// Throws when the manifest lists no session or no session could be read.
RunReport run(const RunConfig& cfg, const Logger& log = {});

/// Writes the synthetic corpus of `cfg.synth` (seeded by `cfg.seed`) into
/// `cfg.synth_output`; returns the manifest path.
std::filesystem::path synth(const RunConfig& cfg, const Logger& log = {});

}  // namespace prosync::run
