// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

// Command line entry point: run, synth and validate.

#include <iostream>

#include "CLI11.hpp"
#include "prosync/run.hpp"

using namespace prosync;

namespace {

int validate_manifest(const std::filesystem::path& manifest, const run::Logger& log) {
  const auto entries = ingest::load_manifest(manifest);
  if (entries.empty()) {
    std::cerr << "error: manifest " << manifest.string() << " lists no sessions\n";
    return 1;
  }
  int failures = 0;
  for (const auto& e : entries) {
    try {
      const auto data = ingest::load_session(e);
      log.info("ok " + e.id + ": " + std::to_string(data.annotation.turns().size()) + " turns, " +
               std::to_string(data.channels.size()) + " channels");
    } catch (const std::exception& ex) {
      std::cerr << "error: session " << e.id << ": " << ex.what() << '\n';
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prosodic entrainment analysis"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string run_config, synth_config, manifest;
  auto* run_cmd = app.add_subcommand("run", "Analyse the corpus named in a config file");
  run_cmd->add_option("config", run_config, "Run configuration")->required();
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic corpus described by a config file");
  synth_cmd->add_option("config", synth_config, "Run configuration")->required();
  auto* validate_cmd = app.add_subcommand("validate", "Check that every session of a manifest loads");
  validate_cmd->add_option("manifest", manifest, "Corpus manifest")->required();

  CLI11_PARSE(app, argc, argv);

  const run::Logger log{run::log_level_from_env(), &std::cerr};
  try {
    if (*run_cmd) {
      const auto report = run::run(run::load_config(run_config), log);
      log.info("analysed " + std::to_string(report.sessions) + " session(s), " +
               std::to_string(report.turns) + " turns");
      return report.errors.empty() ? 0 : 2;
    }
    if (*synth_cmd) {
      const auto path = run::synth(run::load_config(synth_config), log);
      log.info("manifest " + path.string());
      return 0;
    }
    return validate_manifest(manifest, log);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
