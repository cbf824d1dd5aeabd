#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "tabsense/data/table.hpp"
#include "tabsense/service/pipeline.hpp"
#include "test_util.hpp"

using namespace tabsense;
using namespace tabsense::service;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json TitanicConfig() { return json::parse(data::ReadTextFile(testutil::DataFile("titanic_pipeline.json"))); }

PipelineOptions DataDirOptions() {
  PipelineOptions options;
  options.base_dir = testutil::DataFile("titanic_pipeline.json").parent_path();
  return options;
}

}  // namespace

TEST(Pipeline, TitanicBundle) {
  const auto out = testutil::TempDir("pipeline_titanic");
  const json manifest = RunPipeline(TitanicConfig(), out, DataDirOptions());
  EXPECT_EQ(manifest["status"], "ok");
  EXPECT_EQ(manifest["seed"], 0);
  ASSERT_EQ(manifest["files"]["models"].size(), 3u);
  for (const auto& m : manifest["files"]["models"]) EXPECT_TRUE(fs::exists(out / m.get<std::string>()));
  EXPECT_EQ(manifest["files"]["error_report"], "errors.csv");
  EXPECT_EQ(manifest["files"]["gsa_csv"], "gsa.csv");
  EXPECT_EQ(manifest["files"]["explanations"].size(), 2u);
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  EXPECT_EQ(json::parse(data::ReadTextFile(out / "manifest.json")), manifest);

  const std::string errors = data::ReadTextFile(out / "errors.csv");
  EXPECT_EQ(errors.rfind("model_id,family,error\n", 0), 0u);
  EXPECT_EQ(std::count(errors.begin(), errors.end(), '\n'), 4);
  const std::string gsa = data::ReadTextFile(out / "gsa.csv");
  EXPECT_EQ(gsa.rfind("input,output,s1,st\n", 0), 0u);
  // Six inputs with Sex one-hot encoded.
  EXPECT_EQ(std::count(gsa.begin(), gsa.end(), '\n'), 8);
  const json lime = json::parse(data::ReadTextFile(out / "explanations/0_lime.json"));
  EXPECT_EQ(lime["target"], "Survived=1");
  EXPECT_EQ(lime["split"], "validation");
  const json shap = json::parse(data::ReadTextFile(out / "explanations/1_shap.json"));
  EXPECT_EQ(shap["split"], "test");
}

TEST(Pipeline, DeterministicGsaCsv) {
  json config = TitanicConfig();
  config["models"] = json::array({{{"family", "random_forest"}, {"hyperparameters", {{"n_trees", 20}}}}});
  config["explain"] = json::array();
  config["evaluate"]["gsa"]["samples"] = 257;
  const auto a = testutil::TempDir("pipeline_det_a");
  const auto b = testutil::TempDir("pipeline_det_b");
  RunPipeline(config, a, DataDirOptions());
  RunPipeline(config, b, DataDirOptions());
  EXPECT_EQ(data::ReadTextFile(a / "gsa.csv"), data::ReadTextFile(b / "gsa.csv"));
  EXPECT_EQ(data::ReadTextFile(a / "errors.csv"), data::ReadTextFile(b / "errors.csv"));
  EXPECT_EQ(data::ReadTextFile(a / "models/m1.model"), data::ReadTextFile(b / "models/m1.model"));

  // A different seed gives a different design.
  PipelineOptions other = DataDirOptions();
  other.seed = 7;
  const auto c = testutil::TempDir("pipeline_det_c");
  const json m = RunPipeline(config, c, other);
  EXPECT_EQ(m["seed"], 7);
  EXPECT_NE(data::ReadTextFile(a / "gsa.csv"), data::ReadTextFile(c / "gsa.csv"));
}

TEST(Pipeline, UnknownFamilyFailsAtConfigStage) {
  json config = TitanicConfig();
  config["models"].push_back({{"family", "support_vector_machine"}});
  const auto out = testutil::TempDir("pipeline_badfamily");
  try {
    RunPipeline(config, out, DataDirOptions());
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "config");
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
  const json manifest = json::parse(data::ReadTextFile(out / "manifest.json"));
  EXPECT_EQ(manifest["status"], "failed");
  EXPECT_EQ(manifest["error"]["stage"], "config");
  EXPECT_TRUE(manifest["files"]["models"].empty());
  EXPECT_FALSE(fs::exists(out / "models"));
}

TEST(Pipeline, StageTaggingAndPartialManifest) {
  const auto options = DataDirOptions();
  {
    json config = TitanicConfig();
    config["dataset"] = {{"path", "no_such_file.csv"}};
    try {
      RunPipeline(config, testutil::TempDir("pipeline_nodata"), options);
      FAIL();
    } catch (const StageError& e) {
      EXPECT_EQ(e.stage(), "dataset");
      EXPECT_EQ(e.code(), ErrorCode::kIo);
    }
  }
  {
    json config = TitanicConfig();
    config["configure"]["inputs"] = {"Pclass", "Deck"};
    try {
      RunPipeline(config, testutil::TempDir("pipeline_badinput"), options);
      FAIL();
    } catch (const StageError& e) {
      EXPECT_EQ(e.stage(), "configure");
    }
  }
  {
    json config = TitanicConfig();
    config["explain"] = json::array({{{"sample_index", 100000}}});
    config["models"] = json::array({{{"family", "random_forest"}, {"hyperparameters", {{"n_trees", 5}}}}});
    config["evaluate"]["gsa"]["samples"] = 65;
    const auto out = testutil::TempDir("pipeline_badsample");
    try {
      RunPipeline(config, out, options);
      FAIL();
    } catch (const StageError& e) {
      EXPECT_EQ(e.stage(), "explain");
      EXPECT_EQ(e.code(), ErrorCode::kNotFound);
    }
    // Earlier stages were flushed.
    const json manifest = json::parse(data::ReadTextFile(out / "manifest.json"));
    EXPECT_EQ(manifest["status"], "failed");
    EXPECT_EQ(manifest["files"]["gsa_csv"], "gsa.csv");
    EXPECT_TRUE(fs::exists(out / "gsa.csv"));
    EXPECT_TRUE(fs::exists(out / "models/m1.model"));
  }
  {
    json config = TitanicConfig();
    config["extras"] = true;
    EXPECT_THROW(RunPipeline(config, testutil::TempDir("pipeline_extra"), options), StageError);
    config.erase("extras");
    config["schema_version"] = 99;
    try {
      RunPipeline(config, testutil::TempDir("pipeline_version"), options);
      FAIL();
    } catch (const StageError& e) {
      EXPECT_EQ(e.code(), ErrorCode::kVersion);
    }
  }
}
