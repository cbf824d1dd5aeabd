// End-to-end acceptance checks. Prints one PASS / FAIL line per criterion and
// exits non-zero when any of them fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "tabsense/core/error.hpp"
#include "tabsense/core/random.hpp"
#include "tabsense/data/encoding.hpp"
#include "tabsense/data/table.hpp"
#include "tabsense/evaluation/evaluation.hpp"
#include "tabsense/gsa/efast.hpp"
#include "tabsense/lsa/explain.hpp"
#include "tabsense/metrics/loss.hpp"
#include "tabsense/models/model.hpp"
#include "tabsense/models/model_io.hpp"
#include "tabsense/models/network.hpp"
#include "tabsense/service/http.hpp"
#include "tabsense/service/workbench.hpp"
#include "test_util.hpp"

// After Eigen: resolv.h defines an _res macro.
#include <httplib.h>

using namespace tabsense;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void Require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string Fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

const std::vector<std::string> kTitanicInputs = {"Pclass", "Sex", "Age", "SibSp", "Parch", "Fare"};

// Ishigami at N = 65, M = 4 over seeds 0..9. Each draw yields per-curve
// partial and total spectral variances; the draws are pooled before taking
// ratios so that a single low-variance curve cannot dominate the average.
void IshigamiAnalytic(Outcome& out) {
  const auto start = Clock::now();
  const double a = 7.0, b = 0.1, pi = std::acos(-1.0);
  const auto truth = oracle::IshigamiAnalytic(a, b);
  gsa::EfastConfig config;
  config.samples = 65;
  config.interference = 4;
  const std::vector<std::pair<double, double>> bounds(3, {-pi, pi});
  const int omega = gsa::MaxFrequency(config);
  std::vector<double> v_first(3, 0.0), v_total(3, 0.0), v_all(3, 0.0);
  std::vector<double> s1_each(3, 0.0), st_each(3, 0.0);
  constexpr int kDraws = 10;
  for (int seed = 0; seed < kDraws; ++seed) {
    config.seed = static_cast<uint64_t>(seed);
    const auto design = gsa::MakeEfastDesign(config, 3);
    for (size_t i = 0; i < 3; ++i) {
      const Matrix x = gsa::ScaleToBounds(design.unit_points[i], bounds);
      std::vector<double> y(static_cast<size_t>(x.rows()));
      for (Eigen::Index r = 0; r < x.rows(); ++r) y[static_cast<size_t>(r)] = oracle::Ishigami({x(r, 0), x(r, 1), x(r, 2)}, a, b);
      const auto c = gsa::AnalyzeCurve(y, omega, config.interference);
      v_first[i] += c.s1 * c.variance;
      v_total[i] += c.st * c.variance;
      v_all[i] += c.variance;
      s1_each[i] += c.s1 / kDraws;
      st_each[i] += c.st / kDraws;
    }
  }
  std::vector<double> s1(3), st(3);
  for (size_t i = 0; i < 3; ++i) {
    s1[i] = v_first[i] / v_all[i];
    st[i] = v_total[i] / v_all[i];
  }
  const double elapsed = Seconds(start);
  out.detail << "S1=(" << Fixed(s1[0], 3) << ", " << Fixed(s1[1], 3) << ", " << Fixed(s1[2], 3) << ") ST3="
             << Fixed(st[2], 3) << " want S1=(" << Fixed(truth.s1[0], 3) << ", " << Fixed(truth.s1[1], 3) << ", "
             << Fixed(truth.s1[2], 3) << ") ST3=" << Fixed(truth.st[2], 3) << "; unpooled mean of ratios S1=("
             << Fixed(s1_each[0], 3) << ", " << Fixed(s1_each[1], 3) << ", " << Fixed(s1_each[2], 3)
             << ") ST3=" << Fixed(st_each[2], 3) << "; " << Fixed(elapsed, 3) << " s";
  for (size_t i = 0; i < 3; ++i) out.Require(std::abs(s1[i] - truth.s1[i]) <= 0.05, "S1[" + std::to_string(i) + "]");
  out.Require(std::abs(st[2] - truth.st[2]) <= 0.05, "ST3");
  out.Require(elapsed < 5.0, "runtime");
}

// eFAST at N = 1025 against the Saltelli / Jansen estimator with n = 2^14.
void SaltelliAgreement(Outcome& out) {
  const auto start = Clock::now();
  struct Case {
    std::string name;
    std::function<double(const oracle::Point&)> f;
    std::vector<std::pair<double, double>> bounds;
  };
  const std::vector<Case> cases = {
      {"x1*x2", [](const oracle::Point& x) { return x[0] * x[1]; }, {{0.0, 1.0}, {0.0, 1.0}}},
      {"x1+0.5*x2^2", [](const oracle::Point& x) { return x[0] + 0.5 * x[1] * x[1]; }, {{-1.0, 1.0}, {-1.0, 1.0}}},
  };
  double worst = 0.0;
  for (const auto& c : cases) {
    const auto reference = oracle::SaltelliJansen(c.f, c.bounds, size_t{1} << 14, 11);
    gsa::EfastConfig config;
    config.samples = 1025;
    auto batch = [&](const Matrix& x) {
      Matrix y(x.rows(), 1);
      for (Eigen::Index r = 0; r < x.rows(); ++r) y(r, 0) = c.f({x(r, 0), x(r, 1)});
      return y;
    };
    const auto result = gsa::RunEfast(batch, c.bounds, {"x1", "x2"}, {"y"}, config);
    const auto& ix = result.outputs[0].indices;
    out.detail << " " << c.name << ":";
    for (size_t i = 0; i < 2; ++i) {
      const double d1 = std::abs(ix[i].s1 - reference.s1[i]);
      const double dt = std::abs(ix[i].st - reference.st[i]);
      worst = std::max({worst, d1, dt});
      out.detail << " S1 " << Fixed(ix[i].s1, 3) << "/" << Fixed(reference.s1[i], 3) << " ST " << Fixed(ix[i].st, 3)
                 << "/" << Fixed(reference.st[i], 3);
      out.Require(d1 <= 0.05 && dt <= 0.05, c.name + " x" + std::to_string(i + 1));
    }
  }
  const double elapsed = Seconds(start);
  out.detail << "; max dev " << Fixed(worst, 3) << "; " << Fixed(elapsed, 3) << " s";
  out.Require(elapsed < 30.0, "runtime");
}

// Exact kernel SHAP on a boosted-tree model over 8 inputs, checked against
// brute-force Shapley values over all 8! orderings.
void ShapExact(Outcome& out) {
  constexpr int d = 8;
  const std::vector<std::string> names = {"x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8"};
  const std::string csv = testutil::NumericCsv(
      {"x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "y"}, 600, [](size_t r) {
        Rng rng(1000 + r);
        std::vector<double> v(d);
        for (auto& x : v) x = rng.Uniform();
        const double y = v[0] * v[1] + std::sin(3.0 * v[2]) - v[3] * v[3] * v[4] + std::max(v[5], v[6]) +
                         0.5 * v[7] + v[0] * v[7] * v[2];
        v.push_back(y);
        return v;
      });
  const auto table = data::SplitRandom(data::ParseCsv(csv), {}, 3);
  const auto model = testutil::Train(table, names, {"y"}, data::Task::kRegression,
                                     models::Family::kGradientBoostedTrees, {{"n_rounds", 60}});
  const auto encoded = models::EncodeForModel(model, table);
  const Matrix train = data::SelectRows(encoded.inputs.values, encoded.RowsIn(data::Split::kTrain));
  // Background of 40 rows so the explainer and the brute force use the same set.
  const Matrix background = train.topRows(40);
  const auto groups = data::GroupsOf(encoded.inputs, encoded.input_features);
  auto predict = [&](const Matrix& x) -> Vector { return model.PredictRaw(x).col(0); };

  Rng rng(99);
  double max_diff = 0.0, max_residual = 0.0;
  bool all_exact = true;
  for (int s = 0; s < 100; ++s) {
    Vector instance(d);
    for (int j = 0; j < d; ++j) instance(j) = rng.Uniform();
    const auto r = lsa::KernelShap({background, groups, instance, predict}, {});
    all_exact &= r.exact;
    // Coalition worths for every mask, computed once.
    std::vector<double> worth(1u << d);
    for (uint32_t mask = 0; mask < worth.size(); ++mask) {
      Matrix rows = background;
      for (int j = 0; j < d; ++j) {
        if (mask & (1u << j)) rows.col(j).setConstant(instance(j));
      }
      worth[mask] = predict(rows).mean();
    }
    const auto expected = oracle::PermutationShapley([&](uint32_t mask) { return worth[mask]; }, d);
    double sum = 0.0;
    for (int j = 0; j < d; ++j) {
      max_diff = std::max(max_diff, std::abs(r.phi[static_cast<size_t>(j)] - expected[static_cast<size_t>(j)]));
      sum += r.phi[static_cast<size_t>(j)];
    }
    max_residual = std::max(max_residual, std::abs(r.base_value + sum - r.prediction));
  }
  out.detail << "max |phi - brute force| " << max_diff << ", max efficiency residual " << max_residual
             << " over 100 samples";
  out.Require(all_exact, "exact mode");
  out.Require(max_diff < 1e-6, "shapley difference");
  out.Require(max_residual < 1e-6, "efficiency");
}

// LIME on f = 2 x1 - 3 x2 + 0 x3. The instance sits in the top quartile of
// every input, where the bin indicator's sign equals the slope's sign.
void LimeLinear(Outcome& out) {
  int agreed = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    Matrix train(400, 3);
    for (Eigen::Index i = 0; i < train.size(); ++i) train.data()[i] = rng.Uniform();
    Vector x(3);
    for (int j = 0; j < 3; ++j) x(j) = 0.8 + 0.2 * rng.Uniform();
    lsa::ExplainContext context{train,
                                {{"x1", data::FeatureKind::kNumeric, {0}, {}},
                                 {"x2", data::FeatureKind::kNumeric, {1}, {}},
                                 {"x3", data::FeatureKind::kNumeric, {2}, {}}},
                                x,
                                [](const Matrix& m) -> Vector { return 2.0 * m.col(0) - 3.0 * m.col(1); }};
    lsa::LimeConfig config;
    config.seed = seed;
    const auto r = lsa::Lime(context, config);
    if (r.features.size() < 2) continue;
    const std::set<size_t> top = {r.features[0].group, r.features[1].group};
    if (top == std::set<size_t>{0, 1} && r.all_coefficients[0] > 0.0 && r.all_coefficients[1] < 0.0) ++agreed;
  }
  out.detail << agreed << "/100 runs with top-2 = {x1, x2} and signs (+, -)";
  out.Require(agreed >= 95, "agreement");
}

std::vector<double> Flat(const Matrix& m) { return {m.data(), m.data() + m.size()}; }

// Every loss kind against the naive per-sample oracle, plus identities.
void LossCatalog(Outcome& out) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> rows(1, 40);
  const auto& kinds = metrics::AllLosses();
  double worst = 0.0;
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto kind = kinds[static_cast<size_t>(trial) % kinds.size()];
    const std::string name(metrics::LossName(kind));
    const Eigen::Index n = rows(gen);
    Matrix p, t;
    if (metrics::IsRegressionLoss(kind)) {
      const Eigen::Index m = 1 + static_cast<Eigen::Index>(gen() % 3);
      const bool log_domain = kind == metrics::LossKind::kMsle || kind == metrics::LossKind::kRmsle;
      p.resize(n, m);
      t.resize(n, m);
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        p.data()[i] = log_domain ? -0.99 + 10.0 * u(gen) : 20.0 * u(gen) - 10.0;
        t.data()[i] = log_domain ? -0.99 + 10.0 * u(gen) : 20.0 * u(gen) - 10.0;
      }
    } else {
      const Eigen::Index k = metrics::IsMarginLoss(kind) ? 2 : 2 + static_cast<Eigen::Index>(gen() % 3);
      p.resize(n, k);
      t = Matrix::Zero(n, k);
      for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < k; ++c) p(r, c) = u(gen) + 1e-3;
        p.row(r) /= p.row(r).sum();
        t(r, static_cast<Eigen::Index>(gen() % static_cast<uint64_t>(k))) = 1.0;
        if (kind == metrics::LossKind::kNll) p.row(r) = p.row(r).array().log();
      }
    }
    const double got = metrics::ComputeLoss(kind, p, t);
    const double want = metrics::IsRegressionLoss(kind)
                            ? oracle::NaiveRegression(name.c_str(), Flat(p), Flat(t))
                            : oracle::NaiveClassification(name.c_str(), Flat(p), Flat(t), static_cast<size_t>(p.cols()));
    const double dev = std::abs(got - want) / std::max(1.0, std::abs(want));
    worst = std::max(worst, dev);
    if (dev > 1e-12) ++mismatches;

    if (metrics::IsRegressionLoss(kind)) {
      const double mse = metrics::ComputeLoss(metrics::LossKind::kMse, p, t);
      const double rmse = metrics::ComputeLoss(metrics::LossKind::kRmse, p, t);
      if (std::abs(rmse * rmse - mse) > 1e-12 * std::max(1.0, mse)) ++mismatches;
      if (metrics::ComputeLoss(kind, p, p) != 0.0) ++mismatches;
      Matrix q = p;
      q(0, 0) += 0.5;
      if (!(metrics::ComputeLoss(kind, q, p) > 0.0)) ++mismatches;
    }
  }
  out.detail << kinds.size() << " kinds, 1000 instances, worst relative deviation " << worst;
  out.Require(kinds.size() == 14, "14 kinds");
  out.Require(mismatches == 0, std::to_string(mismatches) + " mismatches");
}

// Titanic surrogate: model selection by validation cross-entropy, GSA ranking
// of the selected model, and LIME on male third-class non-survivors.
void Titanic(Outcome& out) {
  const auto table = data::SplitRandom(data::LoadCsv(testutil::DataFile("titanic_surrogate.csv")), {}, 0);
  const std::vector<std::pair<std::string, json>> candidates = {
      {"gbt", json::object()}, {"gbt_depth3", {{"max_depth", 3}}}, {"rf", json::object()}};
  std::vector<models::TrainedModel> trained;
  trained.push_back(testutil::Train(table, kTitanicInputs, {"Survived"}, data::Task::kClassification,
                                    models::Family::kGradientBoostedTrees));
  trained.push_back(testutil::Train(table, kTitanicInputs, {"Survived"}, data::Task::kClassification,
                                    models::Family::kGradientBoostedTrees, candidates[1].second));
  trained.push_back(testutil::Train(table, kTitanicInputs, {"Survived"}, data::Task::kClassification,
                                    models::Family::kRandomForest));
  std::vector<evaluation::RegisteredModel> registered;
  for (size_t i = 0; i < trained.size(); ++i) registered.push_back({candidates[i].first, &trained[i]});
  const auto report = evaluation::EvaluateAll(registered, table, data::Split::kValidation,
                                              metrics::LossKind::kBinaryCrossEntropy);
  size_t best = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].first == report.best_model_id) best = i;
  }
  const auto& model = trained[best];
  out.detail << "best " << report.best_model_id << ";";

  gsa::EfastConfig config;
  config.samples = 1025;
  const auto result = gsa::RunGsa(model, table, data::Split::kValidation, config);
  std::map<std::string, gsa::SobolIndex> by;
  for (const auto& ix : result.outputs.at(0).indices) by[ix.input] = ix;
  bool ranked = true;
  for (const char* strong : {"Pclass", "Age", "SibSp"}) {
    for (const char* weak : {"Fare", "Parch"}) ranked &= by[strong].s1 > by[weak].s1 && by[strong].st > by[weak].st;
  }
  out.detail << " S1/ST";
  for (const char* name : {"Pclass", "Age", "SibSp", "Fare", "Parch"}) {
    out.detail << " " << name << " " << Fixed(by[name].s1, 3) << "/" << Fixed(by[name].st, 3);
  }
  out.Require(ranked, "GSA ranking");

  const auto encoded = models::EncodeForModel(model, table);
  const auto rows = encoded.RowsIn(data::Split::kTest);
  const auto& pclass = table.columns[table.FeatureIndex("Pclass")];
  const auto& sex = table.columns[table.FeatureIndex("Sex")];
  const auto& sex_labels = table.Feature("Sex").categories;
  const auto& survived = table.columns[table.FeatureIndex("Survived")];
  int checked = 0, agreed = 0;
  for (size_t i = 0; i < rows.size() && checked < 10; ++i) {
    const size_t r = encoded.source_rows[rows[i]];
    if (pclass.numeric[r] != 3.0 || sex.codes[r] < 0 || sex_labels[static_cast<size_t>(sex.codes[r])] != "male" ||
        survived.numeric[r] != 0.0) {
      continue;
    }
    lsa::ExplainRequest request;
    request.sample_index = i;
    request.target = "Survived=1";
    const auto e = lsa::ExplainLime(model, table, request);
    ++checked;
    if (e.attributions.size() >= 2 &&
        std::set<std::string>{e.attributions[0].feature, e.attributions[1].feature} ==
            std::set<std::string>{"Pclass", "Sex"} &&
        e.attributions[0].value < 0.0 && e.attributions[1].value < 0.0) {
      ++agreed;
    }
  }
  out.detail << "; LIME top-2 {Pclass, Sex} negative for " << agreed << "/" << checked
             << " male class-3 non-survivors";
  out.Require(checked == 10 && agreed == checked, "LIME top-2");
}

// 100k-row table: CSV load, boosted-tree training, full-table error and GSA.
void Performance(Outcome& out) {
  const auto dir = testutil::TempDir("acceptance_perf");
  const auto path = dir / "wide.csv";
  const std::vector<std::string> header = {"x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "y"};
  testutil::WriteFile(path, testutil::NumericCsv(header, 100000, [](size_t r) {
                        Rng rng(r);
                        std::vector<double> v(8);
                        for (auto& x : v) x = rng.Uniform();
                        v.push_back(2.0 * v[0] - 3.0 * v[1] + v[2] * v[3] + std::sin(4.0 * v[4]) + 0.1 * rng.Normal());
                        return v;
                      }));
  const std::vector<std::string> inputs(header.begin(), header.end() - 1);

  auto start = Clock::now();
  const auto table = data::LoadCsv(path);
  const double load = Seconds(start);

  start = Clock::now();
  const auto model = testutil::Train(table, inputs, {"y"}, data::Task::kRegression,
                                     models::Family::kGradientBoostedTrees);
  const double train = Seconds(start);

  // Without a split every row is a train row.
  start = Clock::now();
  const auto report = evaluation::EvaluateAll({{"m1", &model}}, table, data::Split::kTrain, metrics::LossKind::kMse);
  const double error = Seconds(start);

  start = Clock::now();
  const auto result = gsa::RunGsa(model, table, data::Split::kTrain);
  const double sensitivity = Seconds(start);

  out.detail << report.rows << " rows: load " << Fixed(load, 3) << " s, train " << Fixed(train, 3) << " s, error "
             << Fixed(error, 3) << " s (mse " << Fixed(report.entries.at(0).error, 4) << "), gsa "
             << Fixed(sensitivity, 3) << " s";
  out.Require(report.rows == 100000, "row count");
  out.Require(!result.outputs.empty(), "gsa output");
  out.Require(load < 2.0, "load");
  out.Require(train < 10.0, "train");
  out.Require(error < 2.0, "error");
  out.Require(sensitivity < 5.0, "gsa");
}

// Save / load round trip for every family gives identical predictions.
void Persistence(Outcome& out) {
  const auto dir = testutil::TempDir("acceptance_models");
  const auto table = data::SplitRandom(data::ParseCsv(testutil::LinearCsv(500, 4)), {}, 2);
  Rng rng(5);
  Matrix probe(200, 6);
  for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = -0.5 + 2.0 * rng.Uniform();
  for (auto family : {models::Family::kRandomForest, models::Family::kGradientBoostedTrees, models::Family::kMlp,
                      models::Family::kTabularResnet}) {
    const auto model = testutil::Train(table, {"x1", "x2", "x3", "c"}, {"y"}, data::Task::kRegression, family);
    const auto path = dir / (std::string(models::FamilyName(family)) + ".model");
    models::SaveModel(model, path);
    const auto loaded = models::LoadModel(path);
    const Matrix before = model.PredictRaw(probe), after = loaded.PredictRaw(probe);
    const bool same = before.rows() == after.rows() &&
                      std::memcmp(before.data(), after.data(), sizeof(double) * static_cast<size_t>(before.size())) == 0;
    out.detail << " " << models::FamilyName(family) << (same ? " identical" : " differs");
    out.Require(same, std::string(models::FamilyName(family)));
  }
}

// Analytic network gradients against central differences.
void Gradients(Outcome& out) {
  Rng rng(21);
  Matrix x(24, 3), y(24, 1), onehot = Matrix::Zero(24, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = -1.0 + 2.0 * rng.Uniform();
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.Normal();
  for (Eigen::Index i = 0; i < 24; ++i) onehot(i, i % 3) = 1.0;
  models::NetworkParams mlp;
  mlp.hidden_layers = {8, 6};
  models::NetworkParams res;
  res.blocks = 2;
  res.layer_size = 8;
  const struct {
    const char* name;
    models::NetworkState net;
    const Matrix* targets;
  } nets[] = {
      {"mlp", models::InitNetwork(models::Architecture::kMlp, data::Task::kRegression, mlp, 3, 1, rng), &y},
      {"mlp-classifier", models::InitNetwork(models::Architecture::kMlp, data::Task::kClassification, mlp, 3, 3, rng),
       &onehot},
      {"resnet", models::InitNetwork(models::Architecture::kResnet, data::Task::kRegression, res, 3, 1, rng), &y},
      {"resnet-classifier",
       models::InitNetwork(models::Architecture::kResnet, data::Task::kClassification, res, 3, 3, rng), &onehot},
  };
  for (const auto& n : nets) {
    // Biases start at zero, so a unit fed by an all-dead layer sits exactly on
    // the ReLU kink where central differences see half a slope. Jitter them to
    // check at a differentiable point.
    models::NetworkState net = n.net;
    for (auto& layer : net.layers) {
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = 0.1 * (rng.Uniform() - 0.5);
    }
    const double dev = models::GradientCheck(net, x, *n.targets);
    out.detail << " " << n.name << " " << dev;
    out.Require(dev < 1e-4, n.name);
  }
}

// Scripted session over HTTP: every reply carries a revision that never
// decreases.
void ApiLoop(Outcome& out) {
  service::Workbench workbench;
  service::HttpServer server(workbench);
  const int port = server.BindToAnyPort("127.0.0.1");
  if (port <= 0) {
    out.Require(false, "bind");
    return;
  }
  std::thread thread([&] { server.ListenAfterBind(); });
  server.WaitUntilReady();
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(120, 0);

  uint64_t revision = 0;
  int steps = 0;
  auto step = [&](const char* what, const httplib::Result& r, int status) -> json {
    if (!r) {
      out.Require(false, std::string(what) + " no reply");
      return {};
    }
    const json body = r->body.empty() ? json() : json::parse(r->body, nullptr, false);
    out.Require(r->status == status, std::string(what) + " status " + std::to_string(r->status));
    if (!body.is_object() || !body.contains("revision")) {
      out.Require(false, std::string(what) + " revision missing");
      return body;
    }
    const uint64_t now = body["revision"];
    out.Require(now >= revision, std::string(what) + " revision decreased");
    revision = now;
    ++steps;
    return body;
  };
  auto post = [&](const std::string& path, const json& body) {
    return client.Post("/api/v1" + path, body.dump(), "application/json");
  };
  auto wait_job = [&](const std::string& id) {
    for (int i = 0; i < 12000; ++i) {
      auto r = client.Get("/api/v1/jobs/" + id);
      if (r) {
        const json j = json::parse(r->body);
        if (j["status"] == "done" || j["status"] == "failed") return j;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return json{{"status", "timeout"}};
  };

  const json created = step("create", post("/sessions", {{"seed", 0}}), 201);
  const std::string sid = created.value("session_id", "");
  const std::string base = "/sessions/" + sid;
  step("upload",
       client.Post("/api/v1" + base + "/dataset", data::ReadTextFile(testutil::DataFile("titanic_surrogate.csv")),
                   "text/csv"),
       200);
  step("configure",
       post(base + "/configure", {{"inputs", kTitanicInputs}, {"outputs", {"Survived"}}, {"task", "classification"}}),
       200);
  for (const char* family : {"gradient_boosted_trees", "random_forest"}) {
    const json train = step("train", post(base + "/models", {{"family", family}}), 202);
    const json job = wait_job(train.value("job_id", ""));
    out.Require(job["status"] == "done", std::string("train ") + family);
  }
  const json eval =
      step("evaluate", post(base + "/evaluate", {{"split", "validation"}, {"loss", "binary_cross_entropy"}}), 200);
  const json gsa_job = wait_job(eval.value("gsa_job_id", ""));
  out.Require(gsa_job["status"] == "done", "auto gsa");
  const json gsa = step("gsa", client.Get("/api/v1" + base + "/gsa"), 200);
  out.Require(gsa.value("status", "") == "done", "gsa status");
  for (const char* method : {"lime", "shap"}) {
    const json e = step("explain", post(base + "/explain", {{"sample_index", 0}, {"method", method}}), 200);
    out.Require(e.contains("explanation") && !e["explanation"]["attributions"].empty(), method);
  }
  server.Stop();
  thread.join();
  out.detail << steps << " steps, best " << eval["report"].value("best_model_id", "?") << ", final revision "
             << revision;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"efast-ishigami-analytic", IshigamiAnalytic},
      {"efast-vs-saltelli", SaltelliAgreement},
      {"shap-exact-vs-brute-force", ShapExact},
      {"lime-linear-recovery", LimeLinear},
      {"loss-catalog", LossCatalog},
      {"titanic-reproduction", Titanic},
      {"performance-100k", Performance},
      {"model-persistence", Persistence},
      {"network-gradients", Gradients},
      {"api-loop", ApiLoop},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome out;
    try {
      run(out);
    } catch (const std::exception& e) {
      out.Require(false, std::string("exception: ") + e.what());
    }
    std::printf("%s %s: %s\n", out.pass ? "PASS" : "FAIL", name.c_str(), out.detail.str().c_str());
    std::fflush(stdout);
    failed += out.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
