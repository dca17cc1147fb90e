// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include "prosync/run.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "prosync/features.hpp"

namespace prosync::run {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ValidationError("config key " + key + ": '" + v + "' is not a number");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ValidationError("config key " + key + ": '" + v + "' is not a non-negative integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ValidationError("config key " + key + ": '" + v + "' is not a boolean");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

// One configurable field: how to print it and how to set it.
struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::filesystem::path&)> set;
};

Field real(std::string key, double RunConfig::*outer) {
  return {key, [outer](const RunConfig& c) { return features::format_number(c.*outer); },
          [outer, key](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            c.*outer = to_double(key, v);
          }};
}

template <typename Get>
Field real_at(std::string key, Get ref) {
  return {key, [ref](const RunConfig& c) { return features::format_number(ref(c)); },
          [ref, key](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            ref(c) = to_double(key, v);
          }};
}

template <typename Get>
Field integer_at(std::string key, Get ref) {
  return {key, [ref](const RunConfig& c) { return std::to_string(ref(c)); },
          [ref, key](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(to_uint(key, v));
          }};
}

Field flag(std::string key, bool RunConfig::*member) {
  return {key, [member](const RunConfig& c) { return from_bool(c.*member); },
          [member, key](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            c.*member = to_bool(key, v);
          }};
}

Field path(std::string key, std::filesystem::path RunConfig::*member) {
  return {key, [member](const RunConfig& c) { return (c.*member).generic_string(); },
          [member](RunConfig& c, const std::string& v, const std::filesystem::path& base) {
            const std::filesystem::path p(v);
            c.*member = p.is_absolute() || base.empty() ? p : base / p;
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using C = RunConfig;
    std::vector<Field> t;
    t.push_back(path("manifest", &C::manifest));
    t.push_back(path("output", &C::output));
    t.push_back(integer_at("seed", [](auto& c) -> auto& { return c.seed; }));
    t.push_back(flag("stage.entrain", &C::stage_entrain));
    t.push_back(flag("stage.stats", &C::stage_stats));
    t.push_back(flag("stage.success", &C::stage_success));
    t.push_back(flag("stage.plots", &C::stage_plots));
    t.push_back(flag("debug.nuclei", &C::dump_nuclei));

    t.push_back(real_at("ipu.pause", [](auto& c) -> auto& { return c.analysis.pause; }));
    t.push_back(real_at("nucleus.analysis_window",
                        [](auto& c) -> auto& { return c.analysis.nucleus.analysis_window; }));
    t.push_back(real_at("nucleus.reference_window",
                        [](auto& c) -> auto& { return c.analysis.nucleus.reference_window; }));
    t.push_back(real_at("nucleus.step", [](auto& c) -> auto& { return c.analysis.nucleus.step; }));
    t.push_back(real_at("nucleus.ratio", [](auto& c) -> auto& { return c.analysis.nucleus.ratio; }));
    t.push_back(real_at("nucleus.max_fraction",
                        [](auto& c) -> auto& { return c.analysis.nucleus.max_fraction; }));
    t.push_back(real_at("accent.long_word", [](auto& c) -> auto& { return c.analysis.accent.long_word; }));
    t.push_back(real_at("accent.short_word", [](auto& c) -> auto& { return c.analysis.accent.short_word; }));
    t.push_back(real_at("accent.percentile", [](auto& c) -> auto& { return c.analysis.accent.percentile; }));
    t.push_back(real_at("accent.window", [](auto& c) -> auto& { return c.analysis.accent_window; }));
    t.push_back(real_at("register.window", [](auto& c) -> auto& { return c.analysis.reg.window; }));
    t.push_back(real_at("register.step", [](auto& c) -> auto& { return c.analysis.reg.step; }));
    t.push_back(real_at("register.base_pct", [](auto& c) -> auto& { return c.analysis.reg.base_pct; }));
    t.push_back(real_at("register.top_pct", [](auto& c) -> auto& { return c.analysis.reg.top_pct; }));
    t.push_back(real_at("rhythm.band", [](auto& c) -> auto& { return c.analysis.rhythm_band; }));
    t.push_back(real_at("rhythm.cutoff", [](auto& c) -> auto& { return c.analysis.rhythm_cutoff; }));
    t.push_back(real_at("pairing.min_inter_onset",
                        [](auto& c) -> auto& { return c.pairing.min_inter_onset; }));
    t.push_back(real_at("stats.alpha", [](auto& c) -> auto& { return c.tests.alpha; }));
    t.push_back(integer_at("stats.permutations", [](auto& c) -> auto& { return c.tests.permutations; }));
    t.push_back(real("success.smooth_interval", &C::smooth_interval));

    t.push_back(path("synth.output", &C::synth_output));
    t.push_back(integer_at("synth.sessions", [](auto& c) -> auto& { return c.synth.sessions; }));
    t.push_back(integer_at("synth.n_turns", [](auto& c) -> auto& { return c.synth.n_turns; }));
    t.push_back(integer_at("synth.turns_per_task", [](auto& c) -> auto& { return c.synth.turns_per_task; }));
    t.push_back(real_at("synth.turn_min", [](auto& c) -> auto& { return c.synth.turn_min; }));
    t.push_back(real_at("synth.turn_max", [](auto& c) -> auto& { return c.synth.turn_max; }));
    t.push_back(real_at("synth.pause_min", [](auto& c) -> auto& { return c.synth.pause_min; }));
    t.push_back(real_at("synth.pause_max", [](auto& c) -> auto& { return c.synth.pause_max; }));
    t.push_back(real_at("synth.same_speaker_prob", [](auto& c) -> auto& { return c.synth.same_speaker_prob; }));
    t.push_back(real_at("synth.word_pause_prob", [](auto& c) -> auto& { return c.synth.word_pause_prob; }));
    t.push_back(real_at("synth.word_pause", [](auto& c) -> auto& { return c.synth.word_pause; }));
    t.push_back(integer_at("synth.max_word_syllables",
                           [](auto& c) -> auto& { return c.synth.max_word_syllables; }));
    t.push_back(real_at("synth.short_word_prob", [](auto& c) -> auto& { return c.synth.short_word_prob; }));
    t.push_back(real_at("synth.female_hz", [](auto& c) -> auto& { return c.synth.female_hz; }));
    t.push_back(real_at("synth.male_hz", [](auto& c) -> auto& { return c.synth.male_hz; }));
    t.push_back(real_at("synth.level_sd_speaker", [](auto& c) -> auto& { return c.synth.level_sd_speaker; }));
    t.push_back(real_at("synth.level_sd_turn", [](auto& c) -> auto& { return c.synth.level_sd_turn; }));
    t.push_back(real_at("synth.range_mean", [](auto& c) -> auto& { return c.synth.range_mean; }));
    t.push_back(real_at("synth.range_sd_speaker", [](auto& c) -> auto& { return c.synth.range_sd_speaker; }));
    t.push_back(real_at("synth.range_sd_turn", [](auto& c) -> auto& { return c.synth.range_sd_turn; }));
    t.push_back(real_at("synth.declination", [](auto& c) -> auto& { return c.synth.declination; }));
    t.push_back(real_at("synth.accent_prob", [](auto& c) -> auto& { return c.synth.accent_prob; }));
    t.push_back(real_at("synth.accent_height", [](auto& c) -> auto& { return c.synth.accent_height; }));
    t.push_back(real_at("synth.jitter", [](auto& c) -> auto& { return c.synth.jitter; }));
    t.push_back(real_at("synth.energy_db_mean", [](auto& c) -> auto& { return c.synth.energy_db_mean; }));
    t.push_back(real_at("synth.energy_db_sd_speaker",
                        [](auto& c) -> auto& { return c.synth.energy_db_sd_speaker; }));
    t.push_back(real_at("synth.energy_db_sd_turn", [](auto& c) -> auto& { return c.synth.energy_db_sd_turn; }));
    t.push_back(real_at("synth.rate_mean", [](auto& c) -> auto& { return c.synth.rate_mean; }));
    t.push_back(real_at("synth.rate_sd_speaker", [](auto& c) -> auto& { return c.synth.rate_sd_speaker; }));
    t.push_back(real_at("synth.rate_sd_turn", [](auto& c) -> auto& { return c.synth.rate_sd_turn; }));
    t.push_back(real_at("synth.gain", [](auto& c) -> auto& { return c.synth.gain; }));
    t.push_back(real_at("synth.entrainment_rate", [](auto& c) -> auto& { return c.synth.entrainment_rate; }));
    t.push_back(real_at("synth.disentrain_shift", [](auto& c) -> auto& { return c.synth.disentrain_shift; }));
    t.push_back(real_at("synth.audio_rate", [](auto& c) -> auto& { return c.synth.audio_rate; }));
    t.push_back(real_at("synth.carrier", [](auto& c) -> auto& { return c.synth.carrier; }));
    t.push_back(real_at("synth.noise_db", [](auto& c) -> auto& { return c.synth.noise_db; }));
    t.push_back({"synth.mode", [](const C& c) { return std::string(synthgen::mode_name(c.synth.mode)); },
                 [](C& c, const std::string& v, const std::filesystem::path&) {
                   c.synth.mode = synthgen::parse_mode(v);
                 }});
    t.push_back({"synth.targets",
                 [](const C& c) {
                   std::string s;
                   for (auto tg : c.synth.targets) s += (s.empty() ? "" : ",") + std::string(synthgen::target_name(tg));
                   return s;
                 },
                 [](C& c, const std::string& v, const std::filesystem::path&) {
                   c.synth.targets.clear();
                   std::stringstream ss(v);
                   for (std::string item; std::getline(ss, item, ',');)
                     if (!trim(item).empty()) c.synth.targets.push_back(synthgen::parse_target(trim(item)));
                 }});
    t.push_back({"synth.responder_role",
                 [](const C& c) {
                   return c.synth.responder_role ? std::string(1, role_code(*c.synth.responder_role)) : "x";
                 },
                 [](C& c, const std::string& v, const std::filesystem::path&) {
                   if (v == "x") c.synth.responder_role.reset();
                   else if (v == "d") c.synth.responder_role = Role::kDescriber;
                   else if (v == "f") c.synth.responder_role = Role::kFollower;
                   else throw ValidationError("config key synth.responder_role: expected d, f or x");
                 }});
    t.push_back({"synth.responder_gender",
                 [](const C& c) {
                   return c.synth.responder_gender ? std::string(1, gender_code(*c.synth.responder_gender))
                                                   : "x";
                 },
                 [](C& c, const std::string& v, const std::filesystem::path&) {
                   if (v == "x") c.synth.responder_gender.reset();
                   else if (v == "f") c.synth.responder_gender = Gender::kFemale;
                   else if (v == "m") c.synth.responder_gender = Gender::kMale;
                   else throw ValidationError("config key synth.responder_gender: expected f, m or x");
                 }});
    t.push_back({"synth.genders",
                 [](const C& c) {
                   return std::string(1, gender_code(c.synth.genders[0])) + "," +
                          std::string(1, gender_code(c.synth.genders[1]));
                 },
                 [](C& c, const std::string& v, const std::filesystem::path&) {
                   std::stringstream ss(v);
                   std::vector<Gender> g;
                   for (std::string item; std::getline(ss, item, ',');) {
                     const auto code = trim(item);
                     if (code == "f") g.push_back(Gender::kFemale);
                     else if (code == "m") g.push_back(Gender::kMale);
                     else throw ValidationError("config key synth.genders: expected f or m per speaker");
                   }
                   if (g.size() != 2) throw ValidationError("config key synth.genders: expected two entries");
                   c.synth.genders = {g[0], g[1]};
                 }});
    return t;
  }();
  return table;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write " + p.string());
  os << text;
}

template <typename Fn>
void write_with(const std::filesystem::path& p, Fn fn) {
  std::ostringstream os;
  fn(os);
  write_file(p, os.str());
}

}  // namespace

void RunConfig::validate() const {
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0)) throw ValidationError(std::string("config key ") + key + " must be positive");
  };
  positive(analysis.pause, "ipu.pause");
  positive(analysis.nucleus.analysis_window, "nucleus.analysis_window");
  positive(analysis.nucleus.reference_window, "nucleus.reference_window");
  positive(analysis.nucleus.step, "nucleus.step");
  positive(analysis.accent.long_word, "accent.long_word");
  positive(analysis.accent.short_word, "accent.short_word");
  positive(analysis.accent_window, "accent.window");
  positive(analysis.reg.window, "register.window");
  positive(analysis.reg.step, "register.step");
  positive(analysis.rhythm_band, "rhythm.band");
  positive(analysis.rhythm_cutoff, "rhythm.cutoff");
  positive(pairing.min_inter_onset, "pairing.min_inter_onset");
  positive(smooth_interval, "success.smooth_interval");
  const double p = analysis.accent.percentile;
  if (!(p > 50.0 && p < 100.0))
    throw ValidationError("config key accent.percentile must lie in (50, 100)");
  if (!(tests.alpha > 0.0 && tests.alpha < 1.0))
    throw ValidationError("config key stats.alpha must lie in (0, 1)");
}

std::string RunConfig::describe() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + '\n';
  return out;
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::map<std::string, const Field*> index;
  for (const auto& f : fields()) index[f.key] = &f;
  std::istringstream is{std::string(text)};
  int line_no = 0;
  for (std::string line; std::getline(is, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ParseError(ParseError::Kind::kSyntax, "config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto it = index.find(key);
    if (it == index.end())
      throw ParseError(ParseError::Kind::kSyntax,
                       "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    it->second->set(cfg, value, base_dir);
  }
  cfg.validate();
  cfg.synth.seed = cfg.seed;
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

LogLevel log_level_from_env() {
  const char* v = std::getenv("PROSYNC_LOG");
  if (!v) return LogLevel::kInfo;
  const std::string s(v);
  if (s == "quiet") return LogLevel::kQuiet;
  if (s == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void Logger::info(const std::string& msg) const {
  if (out && level >= LogLevel::kInfo) *out << msg << '\n';
}

void Logger::debug(const std::string& msg) const {
  if (out && level >= LogLevel::kDebug) *out << msg << '\n';
}

RunReport run(const RunConfig& cfg, const Logger& log) {
  cfg.validate();
  const auto entries = ingest::load_manifest(cfg.manifest);
  if (entries.empty()) throw Error("manifest " + cfg.manifest.string() + " lists no sessions");
  std::filesystem::create_directories(cfg.output);

  RunReport report;
  std::vector<features::TurnFeatures> rows;
  std::vector<ingest::DialogAnnotation> annotations;
  for (const auto& entry : entries) {
    try {
      log.info("session " + entry.id + ": analysing");
      const auto data = ingest::load_session(entry);
      const auto result = pipeline::analyze_session(data, cfg.analysis);
      for (const auto& w : result.warnings) log.info("session " + entry.id + ": " + w);
      if (cfg.dump_nuclei)
        for (const auto& s : data.annotation.speakers())
          write_with(cfg.output / ("nuclei_" + s.id + ".tsv"),
                     [&](std::ostream& os) { pipeline::write_nucleus_dump(os, result.nuclei, s.id); });
      rows.insert(rows.end(), result.turns.begin(), result.turns.end());
      annotations.push_back(data.annotation);
      ++report.sessions;
      log.debug("session " + entry.id + ": " + std::to_string(result.turns.size()) + " turns");
    } catch (const std::exception& e) {
      report.errors.push_back("session " + entry.id + ": " + e.what());
      log.info(report.errors.back());
    }
  }
  if (report.sessions == 0) throw Error("no session of " + cfg.manifest.string() + " could be analysed");
  report.turns = rows.size();
  write_with(cfg.output / "features.csv", [&](std::ostream& os) { features::write_features_csv(os, rows); });

  std::vector<std::string> notes;
  if (cfg.stage_entrain) {
    std::vector<entrain::TurnPair> local, global;
    const auto sessions = entrain::group_sessions(rows);
    for (std::size_t s = 0; s < sessions.size(); ++s) {
      num::Rng rng(num::mix_seed(cfg.seed, 100 + s));
      const auto p = entrain::pair_local(rows, sessions[s], rng, cfg.pairing);
      local.insert(local.end(), p.begin(), p.end());
    }
    try {
      num::Rng rng(num::mix_seed(cfg.seed, 1));
      global = entrain::pair_global(rows, rng);
    } catch (const Error& e) {
      notes.push_back(std::string("global pairing skipped: ") + e.what());
      log.info(notes.back());
    }
    const auto means = entrain::speaker_means(rows);
    const auto local_recs = entrain::distances(local, rows, means);
    const auto global_recs = entrain::distances(global, rows, means);
    std::vector<entrain::DistanceRecord> all = local_recs;
    all.insert(all.end(), global_recs.begin(), global_recs.end());
    const auto cells = entrain::build_profile(all);
    write_with(cfg.output / "profiles.csv", [&](std::ostream& os) { entrain::write_profiles_csv(os, cells); });
    if (cfg.stage_plots) {
      std::vector<std::string> sets;
      for (const auto& s : features::feature_sets())
        if (std::find(sets.begin(), sets.end(), s) == sets.end()) sets.push_back(s);
      for (const auto& s : sets)
        write_file(cfg.output / ("profiles_" + s + ".svg"), entrain::profile_svg(cells, s));
    }

    if (cfg.stage_stats) {
      log.info("fitting pairing models");
      num::Rng local_rng(num::mix_seed(cfg.seed, 2)), global_rng(num::mix_seed(cfg.seed, 3));
      const auto local_tests = stats::run_level_tests(local_recs, stats::Level::kLocal, local_rng, cfg.tests);
      const auto global_tests =
          global.empty() ? std::vector<stats::TestResult>{}
                         : stats::run_level_tests(global_recs, stats::Level::kGlobal, global_rng, cfg.tests);
      write_with(cfg.output / "tests_local.csv",
                 [&](std::ostream& os) { stats::write_tests_csv(os, local_tests); });
      write_with(cfg.output / "tests_global.csv",
                 [&](std::ostream& os) { stats::write_tests_csv(os, global_tests); });
      const auto h_local = stats::harvest(local_tests, cfg.tests.alpha);
      const auto h_global = stats::harvest(global_tests, cfg.tests.alpha);
      write_with(cfg.output / "harvest_local.csv", [&](std::ostream& os) { stats::write_harvest_csv(os, h_local); });
      write_with(cfg.output / "harvest_global.csv",
                 [&](std::ostream& os) { stats::write_harvest_csv(os, h_global); });
      for (auto g : {stats::Grouping::kFeatureSet, stats::Grouping::kPosition, stats::Grouping::kSpeakerType}) {
        const auto cl = stats::condense(h_local, g);
        const auto cg = stats::condense(h_global, g);
        const std::string name = stats::grouping_name(g);
        write_with(cfg.output / ("condense_" + name + ".csv"),
                   [&](std::ostream& os) { stats::write_condense_csv(os, cl, cg); });
        if (cfg.stage_plots)
          write_file(cfg.output / ("condense_" + name + ".svg"), stats::condense_svg(cg, cl, name));
      }
    }
  }

  if (cfg.stage_success) {
    std::vector<stats::TaskSuccess> success;
    for (const auto& ann : annotations) {
      try {
        const auto s = stats::task_success(ann, cfg.smooth_interval);
        success.insert(success.end(), s.begin(), s.end());
      } catch (const Error& e) {
        report.errors.push_back("session " + ann.session_id() + ": " + e.what());
      }
    }
    stats::standardize(success);
    write_with(cfg.output / "success.csv", [&](std::ostream& os) { stats::write_success_csv(os, success); });
  }

  std::string meta = "prosync_version = " + std::string(kVersion) + "\n" +
                     "eigen_version = " + std::to_string(EIGEN_WORLD_VERSION) + "." +
                     std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION) + "\n";
  meta += cfg.describe();
  meta += "sessions_analysed = " + std::to_string(report.sessions) + "\n";
  meta += "turns = " + std::to_string(report.turns) + "\n";
  meta += "interaction_subsets = role and gender subsets on a significant two-way interaction; "
          "all four role-gender cells on a significant three-way interaction\n";
  for (const auto& e : report.errors) meta += "error = " + e + "\n";
  for (const auto& n : notes) meta += "note = " + n + "\n";
  write_file(cfg.output / "run_meta", meta);
  return report;
}

std::filesystem::path synth(const RunConfig& cfg, const Logger& log) {
  auto sc = cfg.synth;
  sc.seed = cfg.seed;
  log.info("writing " + std::to_string(sc.sessions) + " synthetic session(s) to " + cfg.synth_output.string());
  return synthgen::write_corpus(sc, cfg.synth_output);
}

}  // namespace prosync::run
