#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "accentid/app.hpp"
#include "accentid/common.hpp"
#include "support/corpus_gen.hpp"

using namespace accentid;
using namespace accentid::app;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("accentid_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

RunConfig config_for(const std::string& manifest, const std::string& out, const std::string& extra = "") {
  auto cfg = RunConfig::parse(R"({"manifest": ")" + manifest + R"(", "output_dir": ")" + out + "\"" +
                              (extra.empty() ? "" : ", " + extra) + "}");
  return cfg;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ACCENTID_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("run config parsing") {
  SUBCASE("defaults") {
    const auto c = RunConfig::parse(R"({"manifest": "m.csv"})");
    CHECK(c.source == FeatureSource::audio);
    CHECK(c.k == 10);
    CHECK(c.pipeline.classifier == eval::Classifier::svm);
    CHECK(c.pipeline.svm.C == 1.0);
    CHECK(c.pipeline.svm.tol == 1e-3);
    CHECK(c.pipeline.mlr.l2 == 1e-6);
    CHECK_FALSE(c.pipeline.smote);
    CHECK_NOTHROW(c.validate());
  }
  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS_AS(RunConfig::parse(R"({"manifest": "m", "sede": 3})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse(R"({"classifier": {"kind": "mlr", "lambda": 1}})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("{not json"), ConfigError);
  }
  SUBCASE("hash ignores jobs and output_dir only") {
    const auto a = RunConfig::parse(R"({"manifest": "m", "jobs": 1, "output_dir": "a"})");
    const auto b = RunConfig::parse(R"({"manifest": "m", "jobs": 4, "output_dir": "b"})");
    const auto c = RunConfig::parse(R"({"manifest": "m", "seed": 2})");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != c.hash());
    CHECK(a.canonical_json(true) != b.canonical_json(true));
  }
  SUBCASE("canonical form parses back to the same config") {
    const auto a = RunConfig::parse(R"({"manifest": "m", "features": {"source": "combined", "ngram": {"min_doc_freq": 3}},
                                        "classifier": {"kind": "mlr", "l2": 0.01}, "protocol": {"kind": "cross_prompt"}})");
    const auto b = RunConfig::parse(a.canonical_json(true));
    CHECK(a.canonical_json(true) == b.canonical_json(true));
    const auto spaces = a.ngram_spaces();
    REQUIRE(spaces.size() == 2);
    CHECK(spaces[0].unit == text::NgramUnit::word);
    CHECK(spaces[1].unit == text::NgramUnit::char_across);
    CHECK(spaces[1].n_max == 10);
    CHECK(spaces[1].min_doc_freq == 3);
  }
  SUBCASE("sweep ranges expand") {
    const auto c = RunConfig::parse(R"({"manifest": "m", "sweep": {"n_from": 100, "n_to": 6000, "n_step": 100}})");
    REQUIRE(c.sweep);
    CHECK(c.sweep->ns.size() == 60);
    CHECK(c.sweep->methods.size() == 3);
  }
  SUBCASE("contradictions fail validation") {
    auto smote_text = RunConfig::parse(
        R"({"manifest": "m", "features": {"source": "char_across"}, "classifier": {"kind": "mlr"}, "balance": {"smote": true}})");
    CHECK_THROWS_AS(smote_text.validate(), ConfigError);
    auto svm_text = RunConfig::parse(R"({"manifest": "m", "features": {"source": "word_ngram"}})");
    CHECK_THROWS_AS(svm_text.validate(), ConfigError);
    auto sel_text = RunConfig::parse(
        R"({"manifest": "m", "features": {"source": "word_ngram"}, "classifier": {"kind": "mlr"}, "selection": {"n": 5}})");
    CHECK_THROWS_AS(sel_text.validate(), ConfigError);
    auto compat = RunConfig::parse(R"({"manifest": "m", "compat": {"smote_before_cv": true}})");
    CHECK_THROWS_AS(compat.validate(), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse(R"({"seed": 1})").validate(), ConfigError);
  }
}

TEST_CASE("extract: toy manifest, idempotent rerun") {
  const auto dir = scratch("extract");
  testing::CorpusSpec spec;
  spec.classes = 3;
  spec.speakers = 1;
  spec.transcripts = false;
  auto manifest = testing::write_synthetic_corpus(dir + "/corpus", spec);
  // keep 3 rows
  std::string csv = read_file(manifest);
  std::istringstream in(csv);
  std::string line, kept;
  for (int i = 0; std::getline(in, line); ++i)
    if (i == 0 || line.find("_P1") != std::string::npos) kept += line + "\n";
  write_file_atomic(manifest, kept);

  setenv(kCacheEnv, (dir + "/cache").c_str(), 1);
  auto cfg = config_for(manifest, dir + "/out");
  std::ostringstream log1, log2;
  CHECK(cmd_extract(cfg, log1) == 0);
  const std::string features = read_file(dir + "/out/features.csv");
  std::istringstream rows(features);
  std::size_t n = 0, width = 0;
  while (std::getline(rows, line)) {
    const auto cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (n == 0) width = cols;
    CHECK(cols == width);
    ++n;
  }
  CHECK(n == 4);
  CHECK(width == 1189);
  const auto before = fs::last_write_time(dir + "/out/features.csv");
  CHECK(cmd_extract(cfg, log2) == 0);
  CHECK(log2.str().find("up to date") != std::string::npos);
  CHECK(fs::last_write_time(dir + "/out/features.csv") == before);
  CHECK(read_file(dir + "/out/groups.json").find("\"formant\"") != std::string::npos);

  SUBCASE("text mode names instances without transcripts") {
    auto text_cfg = config_for(manifest, dir + "/out_t", R"("features": {"source": "word_ngram"}, "classifier": {"kind": "mlr"})");
    try {
      std::ostringstream log;
      cmd_extract(text_cfg, log);
      FAIL("expected an error");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("S_CHN_0_P1") != std::string::npos);
      CHECK(msg.find("S_ENS_0_P1") != std::string::npos);
      CHECK(msg.find("S_HKG_0_P1") != std::string::npos);
    }
  }
  SUBCASE("missing audio is listed exhaustively") {
    fs::remove(dir + "/corpus/audio/S_CHN_0_P1.wav");
    fs::remove(dir + "/corpus/audio/S_HKG_0_P1.wav");
    std::ostringstream log;
    try {
      cmd_extract(config_for(manifest, dir + "/out_m"), log);
      FAIL("expected an error");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("2 audio file(s) missing") != std::string::npos);
      CHECK(msg.find("S_CHN_0_P1") != std::string::npos);
      CHECK(msg.find("S_HKG_0_P1") != std::string::npos);
    }
  }
  unsetenv(kCacheEnv);
}

TEST_CASE("experiment outputs are reproducible and sweep grids complete") {
  const auto dir = scratch("experiment");
  testing::CorpusSpec spec;
  spec.speakers = 5;
  spec.seconds = 0.3;
  const auto manifest = testing::write_synthetic_corpus(dir + "/corpus", spec);
  setenv(kCacheEnv, (dir + "/cache").c_str(), 1);

  auto a = config_for(manifest, dir + "/a", R"("protocol": {"k": 5}, "selection": {"method": "chi_square", "n": 50})");
  auto b = a;
  b.output_dir = dir + "/b";
  b.jobs = 3;
  std::ostringstream log;
  CHECK(cmd_experiment(a, log) == 0);
  CHECK(cmd_experiment(b, log) == 0);
  const auto ra = read_file(dir + "/a/report.json");
  CHECK(ra == read_file(dir + "/b/report.json"));
  CHECK(ra.find(a.hash()) != std::string::npos);
  CHECK(read_file(dir + "/a/report.txt") == read_file(dir + "/b/report.txt"));

  auto text = config_for(manifest, dir + "/t",
                         R"("features": {"source": "char_within"}, "classifier": {"kind": "mlr"}, "protocol": {"kind": "cross_prompt", "k": 5}, "save_model": true)");
  CHECK(cmd_experiment(text, log) == 0);
  const auto model = learn::deserialize_model(read_file(dir + "/t/model.json"));
  CHECK(model.kind == learn::ModelKind::mlr);
  CHECK(model.metadata_json.find(text.hash()) != std::string::npos);

  auto sweep = config_for(manifest, dir + "/s", R"("protocol": {"k": 5}, "sweep": {"ns": [10, 20, 30]})");
  CHECK(cmd_sweep_select(sweep, log) == 0);
  const auto csv = read_file(dir + "/s/sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
  CHECK(csv.rfind("method,N,accuracy\n", 0) == 0);

  std::ostringstream rep;
  CHECK(cmd_report({dir + "/a", dir + "/t", dir + "/s"}, true, rep) == 0);
  CHECK(rep.str().find("P1->P2") != std::string::npos);
  CHECK(rep.str().find("relieff") != std::string::npos);
  unsetenv(kCacheEnv);
}

TEST_CASE("cli exit codes") {
  const auto dir = scratch("exit");
  write_file_atomic(dir + "/unknown.json", R"({"manifest": "m.csv", "bogus": true})");
  write_file_atomic(dir + "/contradiction.json",
                    R"({"manifest": "m.csv", "features": {"source": "char_across"}, "classifier": {"kind": "svm"}})");
  write_file_atomic(dir + "/missing.json", R"({"manifest": ")" + dir + R"(/none.csv"})");
  write_file_atomic(dir + "/bad_manifest.csv", "id,audio_path,transcript_path,label,prompt\nx,a.wav,,XYZ,P1\n");
  write_file_atomic(dir + "/bad_label.json", R"({"manifest": ")" + dir + R"(/bad_manifest.csv"})");
  CHECK(run_cli("experiment " + dir + "/unknown.json") == 2);
  CHECK(run_cli("experiment " + dir + "/contradiction.json") == 2);
  CHECK(run_cli("experiment") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("experiment " + dir + "/missing.json") == 3);
  CHECK(run_cli("extract " + dir + "/bad_label.json") == 3);
  CHECK(run_cli("report " + dir + "/nothing_here") == 3);
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("shipped configs load and validate") {
  std::size_t count = 0;
  for (const auto& e : fs::directory_iterator(std::string(ACCENTID_SOURCE_DIR) + "/configs")) {
    if (e.path().extension() != ".json") continue;
    CAPTURE(e.path().string());
    RunConfig c;
    CHECK_NOTHROW(c = RunConfig::load(e.path().string()));
    CHECK_NOTHROW(c.validate());
    CHECK(RunConfig::parse(c.canonical_json(false, 2)).hash() == c.hash());
    ++count;
  }
  CHECK(count == 18);
}
