#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <random>

#include "accentid/common.hpp"
#include "accentid/corpus.hpp"

using namespace accentid;
using namespace accentid::corpus;

namespace {

const char* kThreeRows =
    "id,audio_path,transcript_path,label,prompt\n"
    "s3,a/3.wav,t/3.txt,JPN,P2\n"
    "s1,a/1.wav,,CHN,P1\n"
    "s2,\"a/with,comma.wav\",t/2.txt,CHN,P1\n";

// ICNALE spoken monologue recordings per L1.
const std::array<std::pair<const char*, int>, 11> kIcnaleCounts = {{{"ENS", 600},
                                                                    {"HKG", 200},
                                                                    {"PAK", 400},
                                                                    {"PHL", 400},
                                                                    {"SIN", 200},
                                                                    {"CHN", 600},
                                                                    {"IDN", 400},
                                                                    {"JPN", 600},
                                                                    {"KOR", 400},
                                                                    {"THA", 200},
                                                                    {"TWN", 400}}};

std::string icnale_shaped_manifest() {
  std::string csv = "id,audio_path,transcript_path,label,prompt\n";
  for (const auto& [code, count] : kIcnaleCounts) {
    for (int i = 0; i < count / 2; ++i) {
      for (const char* p : {"P1", "P2"}) {
        const std::string id = std::string(code) + "_" + std::to_string(i) + "_" + p;
        csv += id + "," + id + ".wav," + id + ".txt," + code + "," + p + "\n";
      }
    }
  }
  return csv;
}

}  // namespace

TEST_CASE("canonical label order is alphabetical") {
  auto codes = label_codes();
  CHECK(codes.size() == 11);
  CHECK(std::is_sorted(codes.begin(), codes.end()));
  CHECK(parse_label("ENS") == L1Label::ENS);
  CHECK_FALSE(parse_label("XYZ").has_value());
}

TEST_CASE("parse_manifest: three valid rows sorted by id") {
  auto m = parse_manifest_text(kThreeRows, "test");
  REQUIRE(m.size() == 3);
  CHECK(m.instances()[0].id == "s1");
  CHECK(m.instances()[1].id == "s2");
  CHECK(m.instances()[2].id == "s3");
  CHECK(m.instances()[1].audio_path == "a/with,comma.wav");
  CHECK_FALSE(m.instances()[0].has_transcript());
  CHECK(m.instances()[2].prompt == Prompt::P2);
}

TEST_CASE("parse_manifest: errors") {
  const std::string header = "id,audio_path,transcript_path,label,prompt\n";
  SUBCASE("unknown label names code and line") {
    try {
      parse_manifest_text(header + "a,x.wav,,CHN,P1\nb,y.wav,,XYZ,P1\n", "t");
      FAIL("expected error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()) == "unknown label XYZ at line 3");
    }
  }
  SUBCASE("malformed row names line") {
    try {
      parse_manifest_text(header + "a,x.wav,CHN,P1\n", "t");
      FAIL("expected error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("duplicate id") {
    CHECK_THROWS_AS(parse_manifest_text(header + "a,x.wav,,CHN,P1\na,y.wav,,JPN,P2\n", "t"),
                    DataError);
  }
  SUBCASE("bad header") { CHECK_THROWS_AS(parse_manifest_text("id,label\n", "t"), DataError); }
  SUBCASE("missing file") { CHECK_THROWS_AS(parse_manifest("/nonexistent/m.csv"), DataError); }
}

TEST_CASE("manifest round trip through serialization") {
  auto m = parse_manifest_text(kThreeRows, "test");
  auto again = parse_manifest_text(serialize_manifest(m), "test");
  CHECK(serialize_manifest(again) == serialize_manifest(m));
  REQUIRE(again.size() == m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(again.instances()[i].id == m.instances()[i].id);
    CHECK(again.instances()[i].audio_path == m.instances()[i].audio_path);
    CHECK(again.instances()[i].transcript_path == m.instances()[i].transcript_path);
    CHECK(again.instances()[i].label == m.instances()[i].label);
    CHECK(again.instances()[i].prompt == m.instances()[i].prompt);
  }
}

TEST_CASE("class_distribution") {
  CHECK(class_distribution(CorpusManifest{}) == std::array<std::size_t, 11>{});
  const std::string header = "id,audio_path,transcript_path,label,prompt\n";
  auto m = parse_manifest_text(header + "a,a.wav,,CHN,P1\nb,b.wav,,CHN,P2\nc,c.wav,,JPN,P1\n", "t");
  auto d = class_distribution(m);
  CHECK(d[static_cast<int>(L1Label::CHN)] == 2);
  CHECK(d[static_cast<int>(L1Label::JPN)] == 1);
  CHECK(std::accumulate(d.begin(), d.end(), std::size_t{0}) == 3);
}

TEST_CASE("ICNALE-shaped manifest reproduces corpus composition and prompt halves") {
  auto m = parse_manifest_text(icnale_shaped_manifest(), "icnale-shaped");
  CHECK(m.size() == 4400);
  auto d = class_distribution(m);
  for (const auto& [code, count] : kIcnaleCounts)
    CHECK(d[static_cast<int>(*parse_label(code))] == static_cast<std::size_t>(count));
  auto [p1, p2] = split_by_prompt(m);
  CHECK(p1.size() == 2200);
  CHECK(p2.size() == 2200);
  auto d1 = class_distribution(p1);
  auto d2 = class_distribution(p2);
  for (int c = 0; c < kNumLabels; ++c) {
    CHECK(d1[c] * 2 == d[c]);
    CHECK(d2[c] * 2 == d[c]);
  }
}

TEST_CASE("split_by_prompt partitions and handles degenerate input") {
  const std::string header = "id,audio_path,transcript_path,label,prompt\n";
  auto m = parse_manifest_text(
      header + "a,a.wav,,CHN,P1\nb,b.wav,,CHN,P2\nc,c.wav,,JPN,P1\nd,d.wav,,JPN,P2\n", "t");
  auto [p1, p2] = split_by_prompt(m);
  CHECK(p1.size() == 2);
  CHECK(p2.size() == 2);
  for (const auto& i : p1.instances()) CHECK(i.prompt == Prompt::P1);
  for (const auto& i : p2.instances()) CHECK(i.prompt == Prompt::P2);

  auto all_p1 = parse_manifest_text(header + "a,a.wav,,CHN,P1\nb,b.wav,,KOR,P1\n", "t");
  auto [full, empty] = split_by_prompt(all_p1);
  CHECK(full.size() == 2);
  CHECK(empty.empty());
}

TEST_CASE("class_distribution is invariant under row order") {
  std::string csv = icnale_shaped_manifest();
  std::vector<std::string> lines;
  std::size_t pos = csv.find('\n') + 1;
  const std::string header = csv.substr(0, pos);
  while (pos < csv.size()) {
    auto end = csv.find('\n', pos);
    lines.push_back(csv.substr(pos, end - pos + 1));
    pos = end + 1;
  }
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 3; ++trial) {
    std::shuffle(lines.begin(), lines.end(), rng);
    std::string shuffled = header;
    for (const auto& l : lines) shuffled += l;
    auto a = parse_manifest_text(csv, "a");
    auto b = parse_manifest_text(shuffled, "b");
    CHECK(class_distribution(a) == class_distribution(b));
    CHECK(serialize_manifest(a) == serialize_manifest(b));
  }
}

TEST_CASE("transcripts load lazily relative to the manifest") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "accentid_corpus_test";
  fs::create_directories(dir / "t");
  write_file_atomic((dir / "t" / "x.txt").string(), "hello world");
  write_file_atomic((dir / "m.csv").string(),
                    "id,audio_path,transcript_path,label,prompt\nx,x.wav,t/x.txt,KOR,P1\n"
                    "y,y.wav,,KOR,P2\n");
  auto m = parse_manifest((dir / "m.csv").string());
  CHECK(m.load_transcript(m.instances()[0]) == "hello world");
  CHECK_THROWS_AS(m.load_transcript(m.instances()[1]), DataError);
  fs::remove_all(dir);
}
