// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include "prosync/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace prosync::ingest {
namespace {

constexpr double kTimeEps = 1e-9;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
  }
  return out;
}

double parse_number(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw ParseError(ParseError::Kind::kSyntax, "line " + std::to_string(line_no) +
                                                    ": not a number: '" + std::string(field) + "'");
  }
  return v;
}

std::string format_decimal(double v, int min_decimals) {
  char buf[64];
  for (int digits = min_decimals; digits <= 17; ++digits) {
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Gender parse_gender(std::string_view code, std::size_t line_no) {
  if (code == "f") return Gender::kFemale;
  if (code == "m") return Gender::kMale;
  throw ValidationError("line " + std::to_string(line_no) + ": unknown gender code '" +
                        std::string(code) + "'");
}

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}
std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}
void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

}  // namespace

// DialogAnnotation --------------------------------------------------------------

DialogAnnotation::DialogAnnotation(std::string session_id, std::vector<Speaker> speakers,
                                   std::vector<Task> tasks, std::vector<Turn> turns,
                                   std::vector<Word> words)
    : session_id_(std::move(session_id)),
      speakers_(std::move(speakers)),
      tasks_(std::move(tasks)),
      turns_(std::move(turns)),
      words_(std::move(words)) {
  for (std::size_t i = 0; i < speakers_.size(); ++i)
    for (std::size_t j = i + 1; j < speakers_.size(); ++j)
      if (speakers_[i].id == speakers_[j].id)
        throw ValidationError("duplicate speaker " + speakers_[i].id);

  std::sort(tasks_.begin(), tasks_.end(),
            [](const Task& a, const Task& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    const Task& t = tasks_[i];
    if (!(t.end > t.start)) throw ValidationError("task " + t.id + " has non-positive duration");
    speaker(t.describer);
    for (std::size_t j = 0; j < i; ++j)
      if (tasks_[j].id == t.id) throw ValidationError("duplicate task " + t.id);
    if (i > 0 && t.start < tasks_[i - 1].end - kTimeEps)
      throw ValidationError("tasks " + tasks_[i - 1].id + " and " + t.id + " overlap");
  }

  std::stable_sort(turns_.begin(), turns_.end(), [](const Turn& a, const Turn& b) {
    return a.start != b.start ? a.start < b.start : a.speaker < b.speaker;
  });
  std::map<std::string, const Turn*> last_of;
  for (std::size_t i = 0; i < turns_.size(); ++i) {
    Turn& t = turns_[i];
    t.index = static_cast<int>(i);
    speaker(t.speaker);
    const Task& task_ref = task(t.task);
    if (!(t.end > t.start))
      throw ValidationError("turn at " + format_time(t.start) + " has non-positive duration");
    if (t.start < task_ref.start - kTimeEps || t.end > task_ref.end + kTimeEps)
      throw ValidationError("turn at " + format_time(t.start) + " lies outside task " + t.task);
    auto& prev = last_of[t.speaker];
    if (prev != nullptr && t.start < prev->end - kTimeEps)
      throw ValidationError("overlapping turns of speaker " + t.speaker + " at " +
                            format_time(t.start));
    if (prev == nullptr || t.end > prev->end) prev = &t;
  }

  std::stable_sort(words_.begin(), words_.end(), [](const Word& a, const Word& b) {
    return a.start != b.start ? a.start < b.start : a.speaker < b.speaker;
  });
  for (const Word& w : words_) {
    speaker(w.speaker);
    if (!(w.end > w.start))
      throw ValidationError("word '" + w.text + "' has non-positive duration");
    const bool nested = std::any_of(turns_.begin(), turns_.end(), [&](const Turn& t) {
      return t.speaker == w.speaker && w.start >= t.start - kTimeEps && w.end <= t.end + kTimeEps;
    });
    if (!nested)
      throw ValidationError("word '" + w.text + "' at " + format_time(w.start) +
                            " is not inside a turn of " + w.speaker);
  }
}

const Speaker& DialogAnnotation::speaker(std::string_view id) const {
  for (const auto& s : speakers_)
    if (s.id == id) return s;
  throw ValidationError("unknown speaker '" + std::string(id) + "'");
}

const Task& DialogAnnotation::task(std::string_view id) const {
  for (const auto& t : tasks_)
    if (t.id == id) return t;
  throw ValidationError("unknown task '" + std::string(id) + "'");
}

Role DialogAnnotation::role_of(std::string_view speaker_id, std::string_view task_id) const {
  return task(task_id).describer == speaker_id ? Role::kDescriber : Role::kFollower;
}

std::vector<Word> DialogAnnotation::words_in(const Turn& turn) const {
  std::vector<Word> out;
  for (const auto& w : words_)
    if (w.speaker == turn.speaker && w.start >= turn.start - kTimeEps &&
        w.end <= turn.end + kTimeEps)
      out.push_back(w);
  return out;
}

// WAV ----------------------------------------------------------------------------

Waveform parse_waveform(const std::vector<unsigned char>& bytes, int channel) {
  using K = ParseError::Kind;
  if (bytes.empty()) throw ParseError(K::kEmpty, "empty WAV file");
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw ParseError(K::kMalformedHeader, "missing RIFF/WAVE header");

  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw ParseError(K::kMalformedHeader, "truncated WAV chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw ParseError(K::kMalformedHeader, "short fmt chunk");
      const std::uint16_t format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format != 1) throw ParseError(K::kUnsupportedEncoding, "WAV encoding is not linear PCM");
      if (bits != 16) throw ParseError(K::kUnsupportedEncoding, "WAV sample width is not 16 bit");
      if (channels == 0 || rate == 0) throw ParseError(K::kMalformedHeader, "invalid fmt chunk");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw ParseError(K::kMalformedHeader, "data chunk before fmt chunk");
      if (channel < 0 || channel >= channels)
        throw ParseError(K::kUnsupportedEncoding, "requested channel not present");
      const std::size_t frame = 2u * channels;
      const std::size_t n = size / frame;
      if (n == 0) throw ParseError(K::kEmpty, "WAV file holds no samples");
      Waveform w;
      w.rate = rate;
      w.samples.resize(static_cast<Eigen::Index>(n));
      const unsigned char* p = bytes.data() + body + 2u * static_cast<std::size_t>(channel);
      for (std::size_t i = 0; i < n; ++i, p += frame) {
        const auto s = static_cast<std::int16_t>(read_u16(p));
        w.samples[static_cast<Eigen::Index>(i)] = s / 32768.0;
      }
      return w;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw ParseError(K::kMalformedHeader, "missing fmt chunk");
  throw ParseError(K::kEmpty, "missing data chunk");
}

Waveform load_waveform(const std::filesystem::path& path, int channel) {
  const std::string raw = read_text(path);
  return parse_waveform(std::vector<unsigned char>(raw.begin(), raw.end()), channel);
}

std::vector<unsigned char> encode_waveform(const Waveform& w) {
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  const auto rate = static_cast<std::uint32_t>(std::lround(w.rate));
  std::vector<unsigned char> out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + 2 * n);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, rate);
  put_u32(out, rate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, 2 * n);
  for (Eigen::Index i = 0; i < w.samples.size(); ++i) {
    const double scaled = std::nearbyint(w.samples[i] * 32768.0);
    const auto s = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(s));
  }
  return out;
}

void write_waveform(const std::filesystem::path& path, const Waveform& w) {
  const auto bytes = encode_waveform(w);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// f0 tracks ---------------------------------------------------------------------

SampledTrack parse_f0_track(std::string_view text) {
  using K = ParseError::Kind;
  std::vector<double> times, hz;
  std::size_t line_no = 0;
  for (auto line : lines_of(text)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 2)
      throw ParseError(K::kSyntax, "line " + std::to_string(line_no) + ": expected <time>\\t<hz>");
    const double t = parse_number(fields[0], line_no);
    const double f = parse_number(fields[1], line_no);
    if (f < 0.0)
      throw ParseError(K::kSyntax, "line " + std::to_string(line_no) + ": negative f0");
    if (!times.empty()) {
      const double step = t - times.back();
      if (!(step > 0.0))
        throw ParseError(K::kOrder, "line " + std::to_string(line_no) + ": timestamps not increasing");
      if (std::fabs(step * kTrackRate - 1.0) > 0.01)
        throw ParseError(K::kRate, "line " + std::to_string(line_no) + ": sample rate is not 100 Hz");
    }
    times.push_back(t);
    hz.push_back(f);
  }
  if (times.empty()) throw ParseError(K::kEmpty, "f0 track has no samples");
  SampledTrack track;
  track.rate = kTrackRate;
  track.start = times.front();
  track.unit = Unit::kHertz;
  track.values = Eigen::Map<const Vector>(hz.data(), static_cast<Eigen::Index>(hz.size()));
  track.valid = track.values.array() > 0.0;
  return track;
}

SampledTrack load_f0_track(const std::filesystem::path& path) {
  return parse_f0_track(read_text(path));
}

std::string format_f0_track(const SampledTrack& track) {
  std::string out;
  for (Eigen::Index i = 0; i < track.size(); ++i) {
    const double v = track.valid[i] ? track.values[i] : 0.0;
    out += format_time(track.time_of(i));
    out += '\t';
    out += format_decimal(v, 2);
    out += '\n';
  }
  return out;
}

void write_f0_track(const std::filesystem::path& path, const SampledTrack& track) {
  write_text(path, format_f0_track(track));
}

// Annotation -----------------------------------------------------------------------

std::string format_time(double t) { return format_decimal(t, 3); }

DialogAnnotation parse_annotation(std::string_view text, std::string session_id) {
  using K = ParseError::Kind;
  std::vector<Speaker> speakers;
  std::vector<Task> tasks;
  std::vector<Turn> turns;
  std::vector<Word> words;
  std::size_t line_no = 0;
  for (auto line : lines_of(text)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto f = split(line, '\t');
    const auto expect = [&](std::size_t n) {
      if (f.size() != n)
        throw ParseError(K::kSyntax, "line " + std::to_string(line_no) + ": " +
                                         std::string(f[0]) + " record needs " +
                                         std::to_string(n - 1) + " fields");
    };
    if (f[0] == "SPK") {
      expect(3);
      speakers.push_back({std::string(f[1]), parse_gender(f[2], line_no)});
    } else if (f[0] == "TASK") {
      expect(6);
      tasks.push_back({std::string(f[1]), parse_number(f[2], line_no), parse_number(f[3], line_no),
                       std::string(f[4]), parse_number(f[5], line_no)});
    } else if (f[0] == "TURN") {
      expect(5);
      turns.push_back({std::string(f[1]), std::string(f[2]), parse_number(f[3], line_no),
                       parse_number(f[4], line_no), 0});
    } else if (f[0] == "WORD") {
      expect(5);
      words.push_back({std::string(f[1]), parse_number(f[2], line_no), parse_number(f[3], line_no),
                       std::string(f[4])});
    } else {
      throw ParseError(K::kSyntax, "line " + std::to_string(line_no) + ": unknown record type '" +
                                       std::string(f[0]) + "'");
    }
  }
  return DialogAnnotation(std::move(session_id), std::move(speakers), std::move(tasks),
                          std::move(turns), std::move(words));
}

DialogAnnotation load_annotation(const std::filesystem::path& path) {
  return parse_annotation(read_text(path), path.stem().string());
}

std::string format_annotation(const DialogAnnotation& ann) {
  std::string out;
  for (const auto& s : ann.speakers())
    out += "SPK\t" + s.id + '\t' + gender_code(s.gender) + '\n';
  for (const auto& t : ann.tasks())
    out += "TASK\t" + t.id + '\t' + format_time(t.start) + '\t' + format_time(t.end) + '\t' +
           t.describer + '\t' + format_decimal(t.score, 1) + '\n';
  for (const auto& t : ann.turns())
    out += "TURN\t" + t.speaker + '\t' + t.task + '\t' + format_time(t.start) + '\t' +
           format_time(t.end) + '\n';
  for (const auto& w : ann.words())
    out += "WORD\t" + w.speaker + '\t' + format_time(w.start) + '\t' + format_time(w.end) + '\t' +
           w.text + '\n';
  return out;
}

void write_annotation(const std::filesystem::path& path, const DialogAnnotation& ann) {
  write_text(path, format_annotation(ann));
}

std::pair<SampledTrack, DialogAnnotation> load_tracks_and_annotation(
    const std::filesystem::path& f0_path, const std::filesystem::path& ann_path) {
  return {load_f0_track(f0_path), load_annotation(ann_path)};
}

// Manifest ----------------------------------------------------------------------------

std::vector<SessionEntry> load_manifest(const std::filesystem::path& path) {
  using K = ParseError::Kind;
  const std::string text = read_text(path);
  const auto base = path.parent_path();
  const auto resolve = [&](std::string_view p) {
    std::filesystem::path q{std::string(p)};
    return q.is_absolute() ? q : base / q;
  };
  std::vector<SessionEntry> sessions;
  std::size_t line_no = 0;
  for (auto line : lines_of(text)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto f = split(line, '\t');
    if (f[0] == "SESSION" && f.size() == 3) {
      sessions.push_back({std::string(f[1]), resolve(f[2]), {}});
    } else if (f[0] == "CHANNEL" && f.size() == 5) {
      auto it = std::find_if(sessions.begin(), sessions.end(),
                             [&](const SessionEntry& s) { return s.id == f[1]; });
      if (it == sessions.end())
        throw ParseError(K::kSyntax, "manifest line " + std::to_string(line_no) +
                                         ": channel for undeclared session");
      it->channels.push_back({std::string(f[2]), resolve(f[3]), resolve(f[4])});
    } else {
      throw ParseError(K::kSyntax, "manifest line " + std::to_string(line_no) + ": bad record");
    }
  }
  return sessions;
}

void write_manifest(const std::filesystem::path& path, const std::vector<SessionEntry>& sessions) {
  std::string out;
  for (const auto& s : sessions) {
    out += "SESSION\t" + s.id + '\t' + s.annotation.generic_string() + '\n';
    for (const auto& c : s.channels)
      out += "CHANNEL\t" + s.id + '\t' + c.speaker + '\t' + c.f0.generic_string() + '\t' +
             c.wav.generic_string() + '\n';
  }
  write_text(path, out);
}

const Channel& SessionData::channel(std::string_view speaker) const {
  for (const auto& c : channels)
    if (c.speaker == speaker) return c;
  throw ValidationError("session " + annotation.session_id() + " has no channel for speaker '" +
                        std::string(speaker) + "'");
}

SessionData load_session(const SessionEntry& entry) {
  SessionData data;
  data.annotation = parse_annotation(read_text(entry.annotation), entry.id);
  for (const auto& c : entry.channels) {
    data.annotation.speaker(c.speaker);
    data.channels.push_back({c.speaker, load_f0_track(c.f0), load_waveform(c.wav)});
  }
  for (const auto& s : data.annotation.speakers()) data.channel(s.id);
  return data;
}

}  // namespace prosync::ingest
