// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "prosync/ingest.hpp"

using namespace prosync;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path kFixtures{PROSYNC_FIXTURES};

ParseError::Kind parse_kind(const std::vector<unsigned char>& bytes) {
  try {
    ingest::parse_waveform(bytes);
  } catch (const ParseError& e) {
    return e.kind();
  }
  FAIL("expected a parse error");
  return ParseError::Kind::kSyntax;
}

}  // namespace

TEST_CASE("one second of digital silence") {
  Waveform w{Vector::Zero(16000), 16000.0};
  const auto back = ingest::parse_waveform(ingest::encode_waveform(w));
  CHECK(back.rate == 16000.0);
  CHECK(back.samples.size() == 16000);
  CHECK(back.samples.isZero(0.0));
}

TEST_CASE("full-scale positive sample reads as 32767/32768") {
  Waveform w{Vector::Constant(3, 32767.0 / 32768.0), 8000.0};
  auto bytes = ingest::encode_waveform(w);
  const auto back = ingest::parse_waveform(bytes);
  CHECK(back.samples[1] == 32767.0 / 32768.0);
  // clipping on encode
  Waveform loud{Vector::Constant(2, 1.5), 8000.0};
  CHECK(ingest::parse_waveform(ingest::encode_waveform(loud)).samples[0] == 32767.0 / 32768.0);
}

TEST_CASE("bundled WAV written by an independent encoder round-trips byte for byte") {
  const std::string raw = slurp(kFixtures / "tone16k.wav");
  const std::vector<unsigned char> bytes(raw.begin(), raw.end());
  const auto w = ingest::parse_waveform(bytes);
  CHECK(w.rate == 16000.0);
  CHECK(w.samples.size() == 1600);
  CHECK(ingest::encode_waveform(w) == bytes);
}

TEST_CASE("stereo files yield the selected channel") {
  const auto left = ingest::load_waveform(kFixtures / "stereo8k.wav", 0);
  const auto right = ingest::load_waveform(kFixtures / "stereo8k.wav", 1);
  CHECK(left.samples[5] == 5.0 / 32768.0);
  CHECK(right.samples[5] == -5.0 / 32768.0);
  CHECK_THROWS_AS(ingest::load_waveform(kFixtures / "stereo8k.wav", 2), ParseError);
}

TEST_CASE("WAV parse errors are distinct") {
  using K = ParseError::Kind;
  CHECK(parse_kind({}) == K::kEmpty);
  const std::string raw8 = slurp(kFixtures / "pcm8.wav");
  CHECK(parse_kind({raw8.begin(), raw8.end()}) == K::kUnsupportedEncoding);
  std::vector<unsigned char> junk{'R', 'I', 'F', 'X', 0, 0, 0, 0, 'W', 'A', 'V', 'E'};
  CHECK(parse_kind(junk) == K::kMalformedHeader);
  auto header_only = ingest::encode_waveform({Vector::Zero(0), 8000.0});
  CHECK(parse_kind(header_only) == K::kEmpty);
  auto truncated = ingest::encode_waveform({Vector::Zero(10), 8000.0});
  truncated.resize(30);
  CHECK(parse_kind(truncated) == K::kMalformedHeader);
  CHECK_THROWS_AS(ingest::load_waveform(kFixtures / "empty.wav"), ParseError);
}

TEST_CASE("f0 rows map directly onto values and validity") {
  const auto t = ingest::parse_f0_track("0.00\t0\n0.01\t120\n0.02\t121\n");
  CHECK(t.rate == 100.0);
  REQUIRE(t.size() == 3);
  CHECK(t.values[0] == 0.0);
  CHECK(t.values[1] == 120.0);
  CHECK(t.values[2] == 121.0);
  CHECK(!t.valid[0]);
  CHECK(t.valid[1]);
  CHECK(t.valid[2]);
}

TEST_CASE("f0 track errors") {
  using K = ParseError::Kind;
  auto kind_of = [](const std::string& text) {
    try {
      ingest::parse_f0_track(text);
    } catch (const ParseError& e) {
      return e.kind();
    }
    FAIL("expected parse error");
    return K::kSyntax;
  };
  CHECK(kind_of("0.00\t100\n0.02\t100\n") == K::kRate);
  CHECK(kind_of("0.00\t100\n0.0101\t100\n0.0202\t100\n") == K::kRate);
  CHECK(kind_of("0.02\t100\n0.01\t100\n") == K::kOrder);
  CHECK(kind_of("0.00\tabc\n") == K::kSyntax);
  CHECK(kind_of("") == K::kEmpty);
  // within 1%
  CHECK_NOTHROW(ingest::parse_f0_track("0.000\t100\n0.01005\t100\n"));
}

TEST_CASE("annotation fixture parses and round-trips") {
  const fs::path path = kFixtures / "session_small.ann";
  const auto ann = ingest::load_annotation(path);
  CHECK(ann.session_id() == "session_small");
  CHECK(ann.speakers().size() == 2);
  CHECK(ann.tasks().size() == 2);
  CHECK(ann.turns().size() == 5);
  CHECK(ann.words().size() == 8);
  CHECK(ann.role_of("A", "t1") == Role::kDescriber);
  CHECK(ann.role_of("B", "t1") == Role::kFollower);
  CHECK(ann.role_of("B", "t2") == Role::kDescriber);
  CHECK(ann.turns()[3].index == 3);
  CHECK(ann.words_in(ann.turns()[1]).size() == 2);
  CHECK(ingest::format_annotation(ann) == slurp(path));

  const fs::path f0 = kFixtures / "small.f0";
  CHECK(ingest::format_f0_track(ingest::load_f0_track(f0)) == slurp(f0));
}

TEST_CASE("annotation invariants are enforced, never repaired") {
  const std::string head = "SPK\tA\tf\nSPK\tB\tm\nTASK\tt1\t0.000\t10.000\tA\t1\n";
  SUBCASE("overlapping turns of one speaker by 10 ms") {
    CHECK_THROWS_AS(ingest::parse_annotation(head + "TURN\tA\tt1\t1.000\t2.010\n"
                                                    "TURN\tA\tt1\t2.000\t3.000\n",
                                             "s"),
                    ValidationError);
  }
  SUBCASE("touching turns are fine") {
    CHECK_NOTHROW(ingest::parse_annotation(
        head + "TURN\tA\tt1\t1.000\t2.000\nTURN\tA\tt1\t2.000\t3.000\n", "s"));
  }
  SUBCASE("turn outside its task") {
    CHECK_THROWS_AS(ingest::parse_annotation(head + "TURN\tA\tt1\t9.000\t10.500\n", "s"),
                    ValidationError);
  }
  SUBCASE("unknown speaker, task, gender, describer") {
    CHECK_THROWS_AS(ingest::parse_annotation(head + "TURN\tC\tt1\t1.000\t2.000\n", "s"),
                    ValidationError);
    CHECK_THROWS_AS(ingest::parse_annotation(head + "TURN\tA\tt9\t1.000\t2.000\n", "s"),
                    ValidationError);
    CHECK_THROWS_AS(ingest::parse_annotation("SPK\tA\tx\n", "s"), ValidationError);
    CHECK_THROWS_AS(ingest::parse_annotation("SPK\tA\tf\nTASK\tt\t0\t1\tZ\t1\n", "s"),
                    ValidationError);
  }
  SUBCASE("word outside any turn of its speaker") {
    CHECK_THROWS_AS(ingest::parse_annotation(head + "TURN\tA\tt1\t1.000\t2.000\n"
                                                    "WORD\tB\t1.100\t1.500\tx\n",
                                             "s"),
                    ValidationError);
  }
  SUBCASE("malformed records") {
    CHECK_THROWS_AS(ingest::parse_annotation("FOO\tA\n", "s"), ParseError);
    CHECK_THROWS_AS(ingest::parse_annotation("SPK\tA\n", "s"), ParseError);
  }
}

TEST_CASE("time formatting keeps three decimals and adds digits only when needed") {
  CHECK(ingest::format_time(1.5) == "1.500");
  CHECK(ingest::format_time(0.1234) == "0.1234");
  CHECK(std::stod(ingest::format_time(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("manifest round trip with relative paths") {
  const fs::path dir = fs::temp_directory_path() / "prosync_manifest_test";
  fs::create_directories(dir);
  std::vector<ingest::SessionEntry> entries{
      {"s1", "s1.ann", {{"A", "s1.A.f0", "s1.A.wav"}, {"B", "s1.B.f0", "s1.B.wav"}}}};
  ingest::write_manifest(dir / "corpus.manifest", entries);
  const auto back = ingest::load_manifest(dir / "corpus.manifest");
  REQUIRE(back.size() == 1);
  CHECK(back[0].annotation == dir / "s1.ann");
  CHECK(back[0].channels[1].wav == dir / "s1.B.wav");
  fs::remove_all(dir);
}
