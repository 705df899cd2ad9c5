#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "step/model.hpp"
#include "support.hpp"

namespace {

namespace fs = std::filesystem;
using step::testing::TempDir;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "step");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = step::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const std::string kData = STEP_DATA_DIR;
const std::string kBlobs = kData + "/blobs_config.json";
const std::string kLoans = kData + "/loans_config.json";

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

TEST(Cli, BenchmarkWritesReport) {
  TempDir dir;
  const auto out = dir.path() / "report.json";
  const Result r = run({"benchmark", "--config", kBlobs, "--out", out.string(), "--trials", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_TRUE(fs::exists(out));
  ASSERT_TRUE(fs::exists(dir.path() / "report.csv"));
  const auto doc = read_json(out);
  EXPECT_EQ(doc.at("trials"), 2);
  EXPECT_TRUE(doc.at("aggregate").contains("proximal_diversity"));
}

TEST(Cli, FlagsOverrideConfigFields) {
  TempDir dir;
  const auto out = dir.path() / "r.json";
  const Result r = run({"benchmark", "--config", kBlobs, "--out", out.string(), "--trials", "1", "--k", "2",
                        "--noise_beta", "0.1", "--method", "step", "--clustering", "random", "--seed", "5",
                        "--poi_cap", "3", "--threshold", "0.6", "--step_size", "0.5", "--max_iterations", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cfg = read_json(out).at("config");
  EXPECT_EQ(cfg.at("k"), 2);
  EXPECT_EQ(cfg.at("trials"), 1);
  EXPECT_EQ(cfg.at("noise_beta"), 0.1);
  EXPECT_EQ(cfg.at("clustering"), "random");
  EXPECT_EQ(cfg.at("seed"), 5);
  EXPECT_EQ(cfg.at("poi_cap"), 3);
  EXPECT_EQ(cfg.at("threshold"), 0.6);
  EXPECT_EQ(cfg.at("step_size"), 0.5);
  EXPECT_EQ(cfg.at("max_iterations"), 20);
  EXPECT_LE(read_json(out).at("per_poi").size(), 3u);
}

TEST(Cli, MissingSchemaIsUsageError) {
  TempDir dir;
  const auto cfg = dir.write("cfg.json", R"({"csv":")" + kData + R"(/blobs.csv","schema":"missing_schema.json"})");
  const Result r = run({"benchmark", "--config", cfg.string(), "--out", (dir.path() / "r.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("missing_schema.json"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"benchmark", "--config", kBlobs}).code, 2);
  EXPECT_EQ(run({"benchmark", "--config", kBlobs, "--out", "x.json", "--k", "many"}).code, 2);
  EXPECT_EQ(run({"benchmark", "--config", "/no/such/config.json", "--out", "x.json"}).code, 2);
  EXPECT_EQ(run({"benchmark", "--config", kBlobs, "--out", "x.json", "--k", "0"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, RuntimeErrorExitsOne) {
  TempDir dir;
  // Loading a model with the wrong dimension fails at run time.
  step::save_model(step::LogisticModel(step::Vector::Ones(5), 0.0), dir.path() / "m.json");
  const auto cfg = dir.write("cfg.json", R"({"csv":")" + kData + R"(/blobs.csv","schema":")" + kData +
                                             R"(/blobs_schema.json","model":{"mode":"load","path":")" +
                                             (dir.path() / "m.json").string() + R"("}})");
  const Result r = run({"benchmark", "--config", cfg.string(), "--out", (dir.path() / "r.json").string()});
  EXPECT_EQ(r.code, 1) << r.err;
}

TEST(Cli, SweepNoiseWritesOneReportPerBeta) {
  TempDir dir;
  const Result r = run({"sweep-noise", "--config", kBlobs, "--betas", "0,0.1,0.3,0.5", "--out-dir",
                        dir.path().string(), "--trials", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  int reports = 0;
  for (const auto& e : fs::directory_iterator(dir.path())) reports += e.path().extension() == ".json";
  EXPECT_EQ(reports, 4);
  EXPECT_TRUE(fs::exists(dir.path() / "report_beta_0.3.json"));
}

TEST(Cli, SweepKWritesOneReportPerK) {
  TempDir dir;
  const Result r = run({"sweep-k", "--config", kBlobs, "--ks", "1,2,3", "--out-dir", dir.path().string(),
                        "--trials", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (int k = 1; k <= 3; ++k) {
    const auto doc = read_json(dir.path() / ("report_k_" + std::to_string(k) + ".json"));
    EXPECT_EQ(doc.at("config").at("k"), k);
  }
  EXPECT_EQ(run({"sweep-k", "--config", kBlobs, "--ks", "1,x", "--out-dir", dir.path().string()}).code, 2);
}

TEST(Cli, RecoursePrintsPaths) {
  const Result r = run({"recourse", "--config", kLoans, "--row", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc.at("paths").size(), 3u);
  for (const auto& p : doc.at("paths")) {
    EXPECT_TRUE(p.contains("cluster"));
    EXPECT_TRUE(p.contains("success"));
    EXPECT_EQ(p.at("points")[0], doc.at("paths")[0].at("points")[0]);
  }
  const Result rec = run({"recourse", "--config", kLoans, "--record",
                          R"({"income":20,"age":30,"education":"bachelor","housing":"rent","region":"south"})"});
  ASSERT_EQ(rec.code, 0) << rec.err;
  EXPECT_EQ(run({"recourse", "--config", kLoans, "--row", "100000"}).code, 2);
  EXPECT_EQ(run({"recourse", "--config", kLoans, "--record", R"({"income":20})"}).code, 2);
}

TEST(Cli, TrainWritesLoadableModel) {
  TempDir dir;
  const auto model = dir.path() / "model.json";
  const auto schema = dir.path() / "schema.json";
  const Result r = run({"train", "--config", kLoans, "--out", model.string(), "--schema-out", schema.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = step::load_model(model);
  EXPECT_EQ(m->weights().size(), 8);
  const auto s = read_json(schema);
  EXPECT_TRUE(s.at("features")[0].contains("mean"));
  EXPECT_TRUE(s.at("features")[0].contains("std"));
}

}  // namespace
