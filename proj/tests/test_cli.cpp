#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

using namespace ensmark;
using namespace ensmark::cli;
namespace fs = std::filesystem;

namespace {

const char* kConfig = R"({
  "lm": {"kind": "synthetic", "seed": 24301, "vocab_size": 1000, "beta": 4.0},
  "ensemble": {
    "strategy": "dip", "alpha": 0.3, "n": 2,
    "secret_keys": ["000102030405060708090a0b0c0d0e0f", "101112131415161718191a1b1c1d1e1f"],
    "context_window": 2
  },
  "prompt": [17, 4, 256],
  "T": 200,
  "seed": 7
})";

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("ensmark_test_" + std::to_string(::getpid()) + "_" +
                                                  ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& content = "") const {
    const auto p = (path_ / name).string();
    if (!content.empty()) std::ofstream(p) << content;
    return p;
  }

 private:
  fs::path path_;
};

std::string read_file(const std::string& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Serialize, EnsembleRoundTrip) {
  const auto j = io::json::parse(kConfig);
  const auto cfg = io::ensemble_from_json(j.at("ensemble"));
  EXPECT_EQ(io::ensemble_from_json(io::to_json(cfg)), cfg);
  const auto gen = io::generate_config_from_json(j);
  EXPECT_EQ(io::generate_config_from_json(io::to_json(gen)), gen);
}

TEST(Serialize, ErrorsNameTheField) {
  auto j = io::json::parse(kConfig);
  j["ensemble"]["n"] = 3;
  try {
    io::generate_config_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse_error);
  }
  j = io::json::parse(kConfig);
  j.erase("T");
  try {
    io::generate_config_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("'T'"), std::string::npos);
  }
  j = io::json::parse(kConfig);
  j["ensemble"]["secret_keys"][1] = j["ensemble"]["secret_keys"][0];
  EXPECT_THROW(io::generate_config_from_json(j), Error);
}

TEST(Serialize, RecordRoundTrip) {
  const auto cfg = io::generate_config_from_json(io::json::parse(kConfig));
  const auto rec = generate(std::get<SyntheticLM>(cfg.lm), cfg.ensemble, cfg.prompt, cfg.length, cfg.seed);
  const auto back = io::record_from_json(io::json::parse(io::record_to_json(rec, cfg).dump()));
  EXPECT_EQ(back.sequence, rec.sequence);
  EXPECT_EQ(back.mask, rec.watermarked_mask);
  ASSERT_TRUE(back.config.has_value());
  EXPECT_EQ(*back.config, cfg);
}

TEST(Serialize, ExperimentSpecRoundTrip) {
  const auto spec = io::experiment_from_json(io::json::parse(
      R"({"kind":"null","n":[1,2],"T":[50],"trials":10,"attack":{"kind":"truncate","keep_fraction":0.5}})"));
  EXPECT_EQ(spec.kind, harness::ExperimentSpec::Kind::null_calibration);
  const auto again = io::experiment_from_json(io::to_json(spec));
  EXPECT_EQ(again.ns, spec.ns);
  EXPECT_EQ(again.attack, spec.attack);
  EXPECT_THROW(io::experiment_from_json(io::json::parse(R"({"kind":"bogus"})")), Error);
}

TEST(Serialize, TraceFile) {
  std::istringstream in("{\"probs\":[0.5,0.5]}\n\n{\"probs\":[1,0]}\n");
  const auto trace = io::read_trace(in);
  EXPECT_EQ(trace.length(), 2u);
  std::istringstream bad("{\"probs\":[0.5,0.6]}\n");
  EXPECT_THROW(io::read_trace(bad), Error);
}

TEST(Cli, OverridesUseDottedPaths) {
  auto j = io::json::parse(kConfig);
  apply_override(j, "T=50");
  apply_override(j, "ensemble.alpha=0.45");
  apply_override(j, "lm.kind=synthetic");
  EXPECT_EQ(j["T"], 50);
  EXPECT_DOUBLE_EQ(j["ensemble"]["alpha"].get<double>(), 0.45);
  EXPECT_EQ(j["lm"]["kind"], "synthetic");
  EXPECT_THROW(apply_override(j, "novalue"), Error);
}

TEST(Cli, GenerateThenDetect) {
  TempDir dir;
  const auto config = dir.file("gen.json", kConfig);
  const auto records = dir.file("out.jsonl");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_generate({config, records, {}, false}, out, err), kExitOk) << err.str();
  const auto first = read_file(records);
  ASSERT_EQ(cmd_generate({config, records, {}, false}, out, err), kExitOk);
  EXPECT_EQ(read_file(records), first);

  DetectArgs det;
  det.config_path = config;
  det.input_path = records;
  det.fpr = 1e-4;
  std::ostringstream reports;
  EXPECT_EQ(cmd_detect(det, reports, err), kExitOk) << err.str();
  EXPECT_NE(reports.str().find("\"decision\":true"), std::string::npos);

  det.keys = {"ffffffffffffffffffffffffffffffff", "eeeeeeeeeeeeeeeeeeeeeeeeeeeeeeee"};
  std::ostringstream wrong;
  EXPECT_EQ(cmd_detect(det, wrong, err), kExitNotDetected);

  det.keys = {"ffffffffffffffffffffffffffffffff"};
  EXPECT_EQ(cmd_detect(det, wrong, err), kExitError);
}

TEST(Cli, DetectRejectsEmptyInputAndMissingVocab) {
  TempDir dir;
  const auto empty = dir.file("empty.jsonl", "\n");
  const auto config = dir.file("gen.json", kConfig);
  DetectArgs det;
  det.config_path = config;
  det.input_path = empty;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_detect(det, out, err), kExitError);

  const auto ensemble_only = dir.file("ens.json", io::json::parse(kConfig)["ensemble"].dump());
  const auto rec = dir.file("rec.jsonl", "{\"tokens\":[1,2,3,4,5,6],\"prompt_len\":2}\n");
  det.config_path = ensemble_only;
  det.input_path = rec;
  EXPECT_EQ(cmd_detect(det, out, err), kExitError);
  det.vocab_size = 10;
  const int rc = cmd_detect(det, out, err);
  EXPECT_TRUE(rc == kExitOk || rc == kExitNotDetected);
}

TEST(Cli, AnalyzeCsv) {
  AnalyzeArgs args;
  args.n_max = 6;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_analyze(args, out, err), kExitOk);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "n,promoted_mass,mu,g,p_bound");
  std::size_t rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 6u);
  EXPECT_NE(out.str().find("e-379"), std::string::npos);
  args.eps = 3.0;
  EXPECT_EQ(cmd_analyze(args, out, err), kExitError);
}

TEST(Cli, ExperimentIsByteIdentical) {
  TempDir dir;
  const auto spec = dir.file("spec.json", R"({"kind":"power","lm":{"vocab_size":200,"beta":4},"n":[1,2],"T":[40],"trials":12,"fpr_targets":[0.01]})");
  ExperimentArgs args{spec, dir.file("a.csv"), dir.file("a.jsonl"), {}};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_experiment(args, out, err), kExitOk) << err.str();
  ExperimentArgs again{spec, dir.file("b.csv"), dir.file("b.jsonl"), {}};
  ASSERT_EQ(cmd_experiment(again, out, err), kExitOk);
  EXPECT_EQ(read_file(dir.file("a.csv")), read_file(dir.file("b.csv")));
  EXPECT_EQ(read_file(dir.file("a.jsonl")), read_file(dir.file("b.jsonl")));
  EXPECT_FALSE(read_file(dir.file("a.jsonl")).empty());
}

TEST(Cli, Selftest) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_selftest(out, err), kExitOk) << out.str() << err.str();
  EXPECT_EQ(out.str().find("[FAIL]"), std::string::npos);
}
