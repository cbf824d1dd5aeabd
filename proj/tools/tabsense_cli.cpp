// Command-line driver: serve the API, run a pipeline config, or run single
// stages against saved model files.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tabsense/core/error.hpp"
#include "tabsense/core/format.hpp"
#include "tabsense/data/table.hpp"
#include "tabsense/evaluation/evaluation.hpp"
#include "tabsense/gsa/efast.hpp"
#include "tabsense/lsa/explain.hpp"
#include "tabsense/models/model_io.hpp"
#include "tabsense/service/http.hpp"
#include "tabsense/service/pipeline.hpp"
#include "tabsense/service/wire.hpp"
#include "tabsense/service/workbench.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tabsense;

namespace {

struct CliFailure {
  std::string stage;
  ErrorCode code;
  std::string message;
};

template <typename Fn>
auto Tagged(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const service::StageError& e) {
    throw CliFailure{e.stage(), e.code(), e.what()};
  } catch (const Error& e) {
    throw CliFailure{stage, e.code(), e.what()};
  } catch (const json::exception& e) {
    throw CliFailure{stage, ErrorCode::kInvalidArgument, e.what()};
  } catch (const std::exception& e) {
    throw CliFailure{stage, ErrorCode::kInternal, e.what()};
  }
}

void WriteOutput(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(out.good(), ErrorCode::kIo, "cannot write '" + path + "'");
  out << content;
}

data::SplitFractions ParseFractions(const std::string& text) {
  data::SplitFractions f;
  if (text.empty()) return f;
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = data::ParseReal(item);
    Require(v.has_value(), ErrorCode::kInvalidArgument, "fractions must be numbers: '" + text + "'");
    parts.push_back(*v);
  }
  Require(parts.size() == 3, ErrorCode::kInvalidArgument, "fractions need three values train,validation,test");
  return {parts[0], parts[1], parts[2]};
}

// Loads the CSV and resolves --split. "all" keeps every row in the train
// split; otherwise single-file data is split with the seed.
struct LoadedData {
  data::DataTable table;
  data::Split split = data::Split::kTest;
};

LoadedData LoadData(const std::string& path, const std::string& split, const std::string& fractions,
                    uint64_t seed) {
  LoadedData out;
  out.table = data::LoadCsv(path);
  if (split == "all") {
    out.split = data::Split::kTrain;
    return out;
  }
  out.split = data::ParseSplit(split);
  out.table = data::SplitRandom(out.table, ParseFractions(fractions), seed);
  return out;
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string ExplanationText(const lsa::LocalExplanation& e, bool normalized) {
  std::ostringstream out;
  out << "method: " << lsa::ExplainMethodName(e.method) << '\n'
      << "sample: " << e.sample_index << " (" << data::SplitName(e.split) << ", table row " << e.table_row
      << ")\n"
      << "target: " << e.target << '\n'
      << "prediction: " << FormatDouble(e.prediction) << '\n'
      << "ground truth: " << e.ground_truth_label << '\n';
  for (size_t c = 0; c < e.class_names.size(); ++c) {
    out << "  p(" << e.class_names[c] << ") = " << FormatDouble(e.class_probabilities[c]) << '\n';
  }
  if (e.method == lsa::ExplainMethod::kShap) {
    out << "base value: " << FormatDouble(e.base_value) << (e.exact ? " (exact)" : " (sampled)") << '\n';
  }
  out << "attributions:\n";
  for (const auto& a : e.attributions) {
    out << "  " << (a.value >= 0 ? '+' : '-') << ' ' << a.feature << ' ' << FormatDouble(a.value);
    if (!a.condition.empty()) out << "  [" << a.condition << ']';
    out << '\n';
  }
  out << "feature values (" << (normalized ? "normalized" : "raw") << "):\n";
  for (const auto& f : e.feature_values) {
    out << "  " << f.column << " = " << FormatDouble(normalized ? f.normalized : f.raw) << '\n';
  }
  for (const auto& w : e.warnings) out << "warning: " << w << '\n';
  return out.str();
}

std::string ExplanationCsv(const lsa::LocalExplanation& e) {
  std::ostringstream out;
  out << "feature,attribution,direction,condition\n";
  for (const auto& a : e.attributions) {
    out << CsvField(a.feature) << ',' << FormatDouble(a.value) << ',' << (a.value >= 0 ? "positive" : "negative")
        << ',' << CsvField(a.condition) << '\n';
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular model workbench: training, selection and sensitivity analysis"};
  app.require_subcommand(1);
  uint64_t seed = 0;
  app.add_option("--seed", seed, "Seed for every random choice")->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API under /api/v1");
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string data_dir;
  size_t workers = 0;
  bool queue_conflicts = false;
  serve->add_option("--port", port, "Port")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--data-dir", data_dir, "Directory for persisted sessions and models");
  serve->add_option("--workers", workers, "Job worker threads (0 = auto)");
  serve->add_flag("--queue-conflicts", queue_conflicts,
                  "Queue concurrent mutations instead of answering 409");

  // run
  auto* run = app.add_subcommand("run", "Run a pipeline config end to end");
  std::string config_path;
  std::string out_dir;
  run->add_option("--config", config_path, "Pipeline config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Train one model on a CSV and save it");
  std::string data_path;
  std::string inputs;
  std::string outputs;
  std::string task = "regression";
  std::string family = "gradient_boosted_trees";
  std::string hyper = "{}";
  std::string normalization = "none";
  std::string fractions;
  std::string model_out;
  train->add_option("--data", data_path, "CSV file")->required();
  train->add_option("--inputs", inputs, "Comma-separated input features")->required();
  train->add_option("--outputs", outputs, "Comma-separated output features")->required();
  train->add_option("--task", task, "regression | classification")->capture_default_str();
  train->add_option("--family", family, "Model family")->capture_default_str();
  train->add_option("--hyperparameters", hyper, "JSON object of hyperparameters")->capture_default_str();
  train->add_option("--normalization", normalization, "none | min_max | mean_std")->capture_default_str();
  train->add_option("--fractions", fractions, "train,validation,test fractions (default 0.7,0.15,0.15)");
  train->add_option("--out", model_out, "Model file to write")->required();

  // gsa
  auto* gsa_cmd = app.add_subcommand("gsa", "eFAST sensitivity indices of a saved model");
  std::string model_path;
  std::string split = "validation";
  std::string gsa_out;
  int samples = 65;
  int interference = 4;
  gsa_cmd->add_option("--model", model_path, "Model file")->required();
  gsa_cmd->add_option("--data", data_path, "CSV file")->required();
  gsa_cmd->add_option("--split", split, "train | validation | test | all")->capture_default_str();
  gsa_cmd->add_option("--fractions", fractions, "train,validation,test fractions");
  gsa_cmd->add_option("--samples", samples, "Points per search curve")->capture_default_str();
  gsa_cmd->add_option("--interference", interference, "Interference factor M")->capture_default_str();
  gsa_cmd->add_option("--out", gsa_out, "CSV output (default stdout)");

  // explain
  auto* explain = app.add_subcommand("explain", "Explain one sample with LIME or SHAP");
  long long sample = -1;
  std::string method = "lime";
  std::string target;
  std::string format = "text";
  bool normalized = false;
  std::string explain_split = "test";
  explain->add_option("--model", model_path, "Model file")->required();
  explain->add_option("--data", data_path, "CSV file")->required();
  explain->add_option("--sample", sample, "Sample position within the split")->required();
  explain->add_option("--method", method, "lime | shap")->capture_default_str();
  explain->add_option("--split", explain_split, "train | validation | test | all")->capture_default_str();
  explain->add_option("--fractions", fractions, "train,validation,test fractions");
  explain->add_option("--class", target, "Output column to explain");
  explain->add_option("--format", format, "text | json | csv")->capture_default_str();
  explain->add_flag("--normalized", normalized, "Show feature values in the normalized space");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Errors of every model in a directory");
  std::string models_dir;
  std::string loss = "mse";
  std::string eval_out;
  evaluate->add_option("--models-dir", models_dir, "Directory of .model files")->required();
  evaluate->add_option("--data", data_path, "CSV file")->required();
  evaluate->add_option("--split", split, "train | validation | test | all")->capture_default_str();
  evaluate->add_option("--fractions", fractions, "train,validation,test fractions");
  evaluate->add_option("--loss", loss, "Loss name")->capture_default_str();
  evaluate->add_option("--out", eval_out, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string message = e.what();
    std::replace(message.begin(), message.end(), '\n', ' ');
    std::fprintf(stderr, "error[args/invalid_argument]: %s\n", message.c_str());
    return 2;
  }

  try {
    if (*serve) {
      service::ServiceOptions options;
      options.workers = workers;
      options.data_dir = data_dir;
      options.conflict = queue_conflicts ? service::ConflictPolicy::kQueue : service::ConflictPolicy::kReject;
      auto wb = Tagged("serve", [&] { return std::make_unique<service::Workbench>(options); });
      service::HttpServer server(*wb);
      std::fprintf(stderr, "listening on http://%s:%d/api/v1\n", host.c_str(), port);
      if (!server.Listen(host, port)) {
        throw CliFailure{"serve", ErrorCode::kIo, "cannot listen on " + host + ":" + std::to_string(port)};
      }
      return 0;
    }

    if (*run) {
      const json config = Tagged("config", [&] {
        return json::parse(data::ReadTextFile(config_path));
      });
      service::PipelineOptions options;
      options.base_dir = fs::absolute(config_path).parent_path();
      if (app.count("--seed") > 0) options.seed = seed;
      const json manifest = Tagged("run", [&] { return service::RunPipeline(config, out_dir, options); });
      std::printf("%s\n", manifest.dump(2).c_str());
      return 0;
    }

    if (*train) {
      const auto loaded = Tagged("load", [&] {
        data::DataTable table = data::LoadCsv(data_path);
        if (table.source == data::DataSource::kSingleFileSplit) {
          table = data::SplitRandom(table, ParseFractions(fractions), seed);
        }
        return table;
      });
      Tagged("train", [&] {
        const auto t = data::ParseTask(task);
        const auto table = data::AssignRoles(loaded, SplitList(inputs), SplitList(outputs));
        const auto encoded = data::Encode(table, data::MakeEncodingSchema(table, t));
        const auto spec = models::ModelSpec::Make(models::ParseFamily(family), t, json::parse(hyper), seed);
        const auto model = models::TrainOnDataset(spec, encoded, data::ParseNormalization(normalization));
        if (fs::path(model_out).has_parent_path()) fs::create_directories(fs::path(model_out).parent_path());
        models::SaveModel(model, model_out);
      });
      return 0;
    }

    if (*gsa_cmd) {
      const auto model = Tagged("load", [&] { return models::LoadModel(model_path); });
      const auto loaded = Tagged("load", [&] { return LoadData(data_path, split, fractions, seed); });
      const std::string csv = Tagged("gsa", [&] {
        gsa::EfastConfig config;
        config.samples = samples;
        config.interference = interference;
        config.seed = seed;
        const auto result = gsa::RunGsa(model, loaded.table, loaded.split, config);
        for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        return gsa::SobolCsv(result);
      });
      Tagged("write", [&] { WriteOutput(gsa_out, csv); });
      return 0;
    }

    if (*explain) {
      const auto model = Tagged("load", [&] { return models::LoadModel(model_path); });
      const auto loaded = Tagged("load", [&] { return LoadData(data_path, explain_split, fractions, seed); });
      const std::string text = Tagged("explain", [&] {
        Require(sample >= 0, ErrorCode::kNotFound, "sample index must be nonnegative");
        lsa::ExplainRequest request;
        request.split = loaded.split;
        request.sample_index = static_cast<size_t>(sample);
        if (!target.empty()) request.target = target;
        const auto m = lsa::ParseExplainMethod(method);
        lsa::LimeConfig lime;
        lime.seed = seed;
        lsa::ShapConfig shap;
        shap.seed = seed;
        const auto e = m == lsa::ExplainMethod::kLime ? lsa::ExplainLime(model, loaded.table, request, lime)
                                                      : lsa::ExplainShap(model, loaded.table, request, shap);
        if (format == "json") return lsa::ExplanationPayload(e, normalized).dump(2) + "\n";
        if (format == "csv") return ExplanationCsv(e);
        Require(format == "text", ErrorCode::kInvalidArgument, "unknown format '" + format + "'");
        return ExplanationText(e, normalized);
      });
      std::cout << text;
      return 0;
    }

    if (*evaluate) {
      std::vector<std::pair<std::string, models::TrainedModel>> loaded_models;
      Tagged("load", [&] {
        Require(fs::is_directory(models_dir), ErrorCode::kNotFound, "no directory '" + models_dir + "'");
        std::vector<fs::path> paths;
        for (const auto& entry : fs::directory_iterator(models_dir)) {
          if (entry.path().extension() == ".model") paths.push_back(entry.path());
        }
        std::sort(paths.begin(), paths.end());
        for (const auto& p : paths) loaded_models.emplace_back(p.stem().string(), models::LoadModel(p));
      });
      const auto loaded = Tagged("load", [&] { return LoadData(data_path, split, fractions, seed); });
      const auto report = Tagged("evaluate", [&] {
        std::vector<evaluation::RegisteredModel> registered;
        for (const auto& [id, m] : loaded_models) registered.push_back({id, &m});
        return evaluation::EvaluateAll(registered, loaded.table, loaded.split, metrics::ParseLoss(loss));
      });
      for (const auto& x : report.excluded) {
        std::fprintf(stderr, "excluded: %s (%s)\n", x.model_id.c_str(), x.reason.c_str());
      }
      std::fprintf(stderr, "best: %s\n", report.best_model_id.c_str());
      Tagged("write", [&] { WriteOutput(eval_out, service::ErrorReportCsv(report)); });
      return 0;
    }
  } catch (const CliFailure& f) {
    std::string message = f.message;
    std::replace(message.begin(), message.end(), '\n', ' ');
    std::fprintf(stderr, "error[%s/%s]: %s\n", f.stage.c_str(), std::string(ErrorCodeName(f.code)).c_str(),
                 message.c_str());
    return 1;
  }
  return 0;
}
