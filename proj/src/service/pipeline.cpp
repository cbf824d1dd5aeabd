#include "tabsense/service/pipeline.hpp"

#include <algorithm>
#include <fstream>

#include "tabsense/models/spec.hpp"
#include "tabsense/service/wire.hpp"
#include "tabsense/service/workbench.hpp"

namespace tabsense::service {

using nlohmann::json;

namespace {

class Writer {
 public:
  explicit Writer(std::filesystem::path root) : root_(std::move(root)) {}

  void Write(const std::string& relative, const std::string& content) {
    const auto path = root_ / relative;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    Require(out.good(), ErrorCode::kIo, "cannot write '" + path.string() + "'");
    out << content;
    Require(out.good(), ErrorCode::kIo, "cannot write '" + path.string() + "'");
  }

 private:
  std::filesystem::path root_;
};

// Runs `fn`, re-tagging any failure with `stage`.
template <typename Fn>
auto Stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.code(), e.what());
  } catch (const json::exception& e) {
    throw StageError(stage, ErrorCode::kInvalidArgument, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw StageError(stage, ErrorCode::kIo, e.what());
  } catch (const std::exception& e) {
    throw StageError(stage, ErrorCode::kInternal, e.what());
  }
}

json ResolvePaths(json dataset, const std::filesystem::path& base) {
  auto resolve = [&](json& value) {
    if (!value.is_string()) return;
    std::filesystem::path p = value.get<std::string>();
    if (p.is_relative() && !base.empty()) value = (base / p).string();
  };
  if (dataset.contains("path")) resolve(dataset["path"]);
  if (dataset.contains("paths") && dataset["paths"].is_object()) {
    for (auto& item : dataset["paths"].items()) resolve(item.value());
  }
  return dataset;
}

void CheckJob(const Workbench& wb, const std::string& job, const std::string& stage) {
  wb.WaitJob(job);
  const json status = wb.GetJob(job);
  if (status.at("status") == "failed") {
    const auto& err = status.at("error");
    ErrorCode code = ErrorCode::kInternal;
    for (int c = 0; c <= static_cast<int>(ErrorCode::kInternal); ++c) {
      if (ErrorCodeName(static_cast<ErrorCode>(c)) == err.at("code").get<std::string>()) {
        code = static_cast<ErrorCode>(c);
      }
    }
    throw StageError(stage, code, err.at("message").get<std::string>());
  }
}

}  // namespace

json RunPipeline(const json& config, const std::filesystem::path& out_dir, const PipelineOptions& options) {
  json manifest{{"schema_version", kSchemaVersion}, {"status", "running"}};
  json files{{"models", json::array()}, {"explanations", json::array()}};
  Writer writer(out_dir);

  auto finish = [&](const std::string& status) {
    manifest["status"] = status;
    manifest["files"] = files;
    std::filesystem::create_directories(out_dir);
    writer.Write("manifest.json", manifest.dump(2) + "\n");
  };

  try {
    // Everything is validated before any data is touched.
    struct Plan {
      uint64_t seed = 0;
      json dataset, configure, models, evaluate, explain;
    };
    const Plan plan = Stage("config", [&] {
      Require(config.is_object(), ErrorCode::kInvalidArgument, "config must be a JSON object");
      for (const auto& item : config.items()) {
        static const std::vector<std::string> known{"schema_version", "seed",     "dataset", "configure",
                                                    "models",         "evaluate", "explain"};
        Require(std::find(known.begin(), known.end(), item.key()) != known.end(),
                ErrorCode::kInvalidArgument, "unknown config section '" + item.key() + "'");
      }
      if (config.contains("schema_version")) {
        Require(config.at("schema_version") == kSchemaVersion, ErrorCode::kVersion,
                "unsupported config schema_version");
      }
      Plan p;
      p.seed = options.seed ? *options.seed : config.value("seed", uint64_t{0});
      Require(config.contains("dataset"), ErrorCode::kInvalidArgument, "config needs a 'dataset' section");
      Require(config.contains("configure"), ErrorCode::kInvalidArgument, "config needs a 'configure' section");
      p.dataset = ResolvePaths(config.at("dataset"), options.base_dir);
      p.configure = config.at("configure");
      const FeatureConfig features = FeatureConfig::FromJson(p.configure);
      p.models = config.value("models", json::array());
      Require(p.models.is_array() && !p.models.empty(), ErrorCode::kInvalidArgument,
              "config needs at least one entry in 'models'");
      for (const auto& m : p.models) {
        Require(m.is_object() && m.contains("family"), ErrorCode::kInvalidArgument,
                "every model needs a 'family'");
        models::ModelSpec::Make(models::ParseFamily(m.at("family").get<std::string>()), features.task,
                                m.value("hyperparameters", json::object()), p.seed);
      }
      p.evaluate = config.value("evaluate", json::object());
      p.explain = config.value("explain", json::array());
      Require(p.explain.is_array(), ErrorCode::kInvalidArgument, "'explain' must be a list");
      return p;
    });
    manifest["seed"] = plan.seed;

    ServiceOptions service_options;
    Workbench wb(service_options);
    const std::string sid = wb.CreateSession({{"seed", plan.seed}}).at("session_id").get<std::string>();
    Stage("dataset", [&] { wb.UploadDataset(sid, plan.dataset); });
    const json configured = Stage("configure", [&] { return wb.Configure(sid, plan.configure); });
    manifest["fingerprint"] = configured.at("fingerprint");
    manifest["rows"] = configured.at("rows");
    manifest["dropped_rows"] = configured.at("dropped_rows");
    manifest["warnings"] = configured.at("warnings");

    for (const auto& m : plan.models) {
      Stage("train", [&] {
        json body = m;
        if (!body.contains("seed")) body["seed"] = plan.seed;
        const json started = wb.TrainModel(sid, body);
        CheckJob(wb, started.at("job_id").get<std::string>(), "train");
        const std::string mid = started.at("model_id").get<std::string>();
        const std::string rel = "models/" + mid + ".model";
        writer.Write(rel, wb.DownloadModel(sid, mid));
        files["models"].push_back(rel);
      });
    }

    const json evaluated = Stage("evaluate", [&] { return wb.Evaluate(sid, plan.evaluate); });
    const json& report = evaluated.at("report");
    manifest["best_model_id"] = report.at("best_model_id");
    Stage("write", [&] {
      writer.Write("evaluation.json", report.dump(2) + "\n");
      files["evaluation"] = "evaluation.json";
      // Rebuilt as a typed report so the CSV uses the shared number format.
      evaluation::EvaluationReport typed;
      typed.split = data::ParseSplit(report.at("split").get<std::string>());
      typed.loss = metrics::ParseLoss(report.at("loss").get<std::string>());
      for (const auto& e : report.at("entries")) {
        typed.entries.push_back({e.at("model_id").get<std::string>(),
                                 models::ParseFamily(e.at("family").get<std::string>()),
                                 e.at("error").get<double>()});
      }
      writer.Write("errors.csv", ErrorReportCsv(typed));
      files["error_report"] = "errors.csv";
    });

    Stage("gsa", [&] {
      CheckJob(wb, evaluated.at("gsa_job_id").get<std::string>(), "gsa");
      const json gsa = wb.GetGsa(sid);
      writer.Write("gsa.csv", gsa.at("csv").get<std::string>());
      writer.Write("gsa.json", gsa.at("result").dump(2) + "\n");
      files["gsa_csv"] = "gsa.csv";
      files["gsa_json"] = "gsa.json";
    });

    for (size_t i = 0; i < plan.explain.size(); ++i) {
      Stage("explain", [&] {
        json body = plan.explain[i];
        Require(body.is_object(), ErrorCode::kInvalidArgument, "explain entries must be objects");
        body.erase("async");
        const json out = wb.Explain(sid, body);
        const auto& e = out.at("explanation");
        const std::string rel =
            "explanations/" + std::to_string(i) + "_" + e.at("method").get<std::string>() + ".json";
        writer.Write(rel, e.dump(2) + "\n");
        files["explanations"].push_back(rel);
      });
    }
    manifest["revision"] = wb.Revision(sid);
    finish("ok");
  } catch (const StageError& e) {
    manifest["error"] = {{"stage", e.stage()}, {"code", ErrorCodeName(e.code())}, {"message", e.what()}};
    try {
      finish("failed");
    } catch (const std::exception&) {
    }
    throw;
  }
  return manifest;
}

}  // namespace tabsense::service
