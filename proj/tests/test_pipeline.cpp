#include <doctest.h>

#include <unistd.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "council/pipeline.hpp"

using namespace council;
using namespace council::pipeline;
using nlohmann::json;

namespace {

const fs::path kCorpus = fs::path(COUNCILKIT_FIXTURES_DIR) / "corpus";

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("councilkit-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

json corpus_config() {
  std::ifstream in(kCorpus / "config.json");
  return json::parse(in);
}

// Writes a config into `dir` with every relative input made absolute.
fs::path write_config(const fs::path& dir, json doc) {
  for (auto& [k, v] : doc["inputs"].items()) v = (kCorpus / v.get<std::string>()).lexically_normal().string();
  if (doc.contains("did")) {
    doc["did"]["panel"] = (kCorpus / doc["did"]["panel"].get<std::string>()).string();
    if (doc["did"].contains("median_split"))
      doc["did"]["median_split"]["file"] = (kCorpus / doc["did"]["median_split"]["file"].get<std::string>()).string();
  }
  if (doc.contains("stats"))
    for (auto& r : doc["stats"]["regressions"]) r["data"] = (kCorpus / r["data"].get<std::string>()).string();
  doc["output_dir"] = (dir / "out").string();
  const auto p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("hashing") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("transcript file names") {
  auto m = meeting_info_from_filename("springfield_2021-06-15_youtube.txt");
  REQUIRE(m);
  CHECK(m->city == "springfield");
  CHECK(m->date.month == 6);
  CHECK(m->channel == transcript::Channel::youtube);
  m = meeting_info_from_filename("san_mateo_2020-01-02.txt");
  REQUIRE(m);
  CHECK(m->city == "san_mateo");
  CHECK_FALSE(meeting_info_from_filename("notes.txt"));
  CHECK_FALSE(meeting_info_from_filename("x_2021-02-30.csv"));
}

TEST_CASE("config loading") {
  TempDir t;
  const auto p = write_config(t.path, corpus_config());
  const auto cfg = load_config(p);
  CHECK(cfg.seed == 12345u);
  CHECK(cfg.did.enabled);
  CHECK(cfg.did.bootstrap_draws == 199);
  CHECK(*cfg.did.min_event == -6);
  CHECK(cfg.regressions.size() == 1);
  CHECK(cfg.filter.min_seconds == 900);

  LoadOptions lo;
  lo.seed = 7;
  const auto other = load_config(p, lo);
  CHECK(other.seed == 7u);
  CHECK(other.hash() != cfg.hash());
  CHECK(run_directory(other) != run_directory(cfg));

  lo = {};
  lo.output_dir = t.path / "elsewhere";
  CHECK(load_config(p, lo).hash() == cfg.hash());
}

TEST_CASE("config errors") {
  TempDir t;
  auto expect_error = [&](json doc, const std::string& fragment) {
    const auto p = write_config(t.path, std::move(doc));
    try {
      load_config(p);
      FAIL("no error for " << fragment);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  auto doc = corpus_config();
  doc["colour"] = "blue";
  expect_error(doc, "unknown key 'colour'");
  doc = corpus_config();
  doc["did"]["bootsrap_draws"] = 10;
  expect_error(doc, "unknown key 'bootsrap_draws'");
  doc = corpus_config();
  doc["seed"] = -1;
  expect_error(doc, "seed");
  doc = corpus_config();
  doc["did"]["bootstrap_draws"] = 1;
  expect_error(doc, "at least 2");
  doc = corpus_config();
  doc["stats"]["regressions"][0]["model"] = "probit";
  expect_error(doc, "ols or logit");
  doc = corpus_config();
  doc["inputs"]["voters"] = "missing.csv";
  expect_error(doc, "does not exist");
  doc = corpus_config();
  doc["filter"]["min_seconds"] = 60000;
  expect_error(doc, "exceeds");
  std::ofstream(t.path / "bad.json") << "{ nope";
  CHECK_THROWS_AS(load_config(t.path / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_config(t.path / "absent.json"), ConfigError);
}

TEST_CASE("stages: upstream checks, overwrite guard, seeds") {
  TempDir t;
  std::ostringstream log;
  auto doc = corpus_config();
  const auto cfg = load_config(write_config(t.path, doc));
  CHECK_THROWS_WITH_AS(cmd_link(cfg, {}, log), doctest::Contains("run `councilkit parse` first"), ConfigError);

  cmd_parse(cfg, {}, log);
  const auto run = run_directory(cfg);
  CHECK(fs::exists(run / "parse" / "meetings.ndjson"));
  CHECK_FALSE(fs::exists(run / "parse.staging"));
  const auto report = json::parse(slurp(run / "parse" / "report.json"));
  CHECK(report["meta"]["config_hash"] == cfg.hash());

  CHECK_THROWS_WITH_AS(cmd_parse(cfg, {}, log), doctest::Contains("--force"), ConfigError);
  CHECK_NOTHROW(cmd_parse(cfg, {true}, log));

  const std::string manifest = slurp(run / "parse" / "manifest.csv");
  CHECK(manifest.find("broken_2021-05-05.txt") != std::string::npos);
  CHECK(manifest.find("too short") != std::string::npos);

  doc.erase("seed");
  const auto unseeded = load_config(write_config(t.path, doc));
  CHECK_THROWS_WITH_AS(cmd_did(unseeded, {}, log), doctest::Contains("needs a seed"), ConfigError);
}

TEST_CASE("did panel without cohort column is an actionable error") {
  TempDir t;
  std::ofstream(t.path / "panel.csv") << "city,month,outcome\na,0,1\na,1,2\n";
  auto doc = corpus_config();
  const auto p = write_config(t.path, doc);
  auto j = json::parse(slurp(p));
  j["did"]["panel"] = (t.path / "panel.csv").string();
  j["did"].erase("median_split");
  std::ofstream(p) << j.dump(2);
  std::ostringstream log;
  CHECK_THROWS_WITH_AS(cmd_did(load_config(p), {}, log), doctest::Contains("cohort_month"), ConfigError);
}

TEST_CASE("full run writes the expected tree") {
  TempDir t;
  std::ostringstream log;
  const auto cfg = load_config(write_config(t.path, corpus_config()));
  cmd_all(cfg, {}, log);
  const auto run = run_directory(cfg);
  for (const char* f : {"parse/meetings.ndjson", "annotate/issues.csv", "link/matches.csv", "link/summary.json",
                        "validate/validation_report.json", "stats/unanimity_audit.json", "did/att_gt.csv",
                        "did/att_overall.json", "did/twfe.json", "report/index.json"}) {
    CAPTURE(f);
    CHECK(fs::exists(run / f));
  }
  const auto overall = json::parse(slurp(run / "did" / "att_overall.json"));
  CHECK(overall["meta"]["seed"] == 12345);
  const auto index = json::parse(slurp(run / "report" / "index.json"));
  CHECK(index["files"].size() > 10);
}
